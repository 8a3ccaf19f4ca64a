//! Near-earth SGP4 propagation to the TEME inertial frame.
//!
//! Deep-space corrections (periods >= 225 min) are intentionally not
//! implemented; [`crate::tle`] rejects such records before they reach the
//! propagator.

use crate::tle::OrbitalElements;
use crate::time::minutes_between;
use crate::Vec3d;
use chrono::{DateTime, Utc};
use thiserror::Error;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const DEG2RAD: f64 = std::f64::consts::PI / 180.0;
const X2O3: f64 = 2.0 / 3.0;

/// Maximum offset from the element epoch a propagation is allowed to span.
pub const MAX_EPOCH_OFFSET_DAYS: f64 = 7.0;

/// Geopotential constants used by the propagator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityModel {
    pub radius_earth_km: f64,
    /// sqrt(GM) in earth-radii^1.5 per minute.
    pub ke: f64,
    pub j2: f64,
    pub j3: f64,
    pub j4: f64,
}

/// WGS-72 constants, the historical SGP4 convention and the default here.
pub const WGS72: GravityModel = GravityModel {
    radius_earth_km: 6378.135,
    ke: 0.074_366_916_133_173_42,
    j2: 0.001_082_616,
    j3: -0.000_002_538_81,
    j4: -0.000_001_655_97,
};

/// WGS-84 constants, selectable as a configuration knob.
pub const WGS84: GravityModel = GravityModel {
    radius_earth_km: 6378.137,
    ke: 0.074_366_853_168_714_96,
    j2: 0.001_082_629_989_05,
    j3: -0.000_002_532_153_06,
    j4: -0.000_001_610_987_61,
};

/// Propagated inertial state in the TEME frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub epoch: DateTime<Utc>,
    /// Position in km.
    pub position_km: Vec3d,
    /// Velocity in km/s.
    pub velocity_kms: Vec3d,
}

impl StateVector {
    /// Geocentric distance in km.
    pub fn radius_km(&self) -> f64 {
        self.position_km.norm()
    }

    /// Sanity band for in-scope LEO objects (altitudes ~120-2100 km).
    pub fn in_leo_band(&self) -> bool {
        (6_500.0..=8_500.0).contains(&self.radius_km())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("requested epoch is {offset_days:.2} days from the element epoch (limit {limit_days})")]
    EpochTooFar { offset_days: f64, limit_days: f64 },
    #[error("propagation diverged: {0}")]
    Diverged(&'static str),
    #[error("deep-space elements are not supported (period >= 225 min)")]
    DeepSpace,
}

/// SGP4 constants initialized once per element set.
#[derive(Debug, Clone)]
pub struct Propagator {
    gravity: GravityModel,
    epoch: DateTime<Utc>,

    // recovered mean elements (radians, rad/min)
    no_unkozai: f64,
    ecco: f64,
    inclo: f64,
    nodeo: f64,
    argpo: f64,
    mo: f64,
    bstar: f64,

    // derived init constants
    simple: bool,
    aycof: f64,
    con41: f64,
    cc1: f64,
    cc4: f64,
    cc5: f64,
    d2: f64,
    d3: f64,
    d4: f64,
    delmo: f64,
    eta: f64,
    argpdot: f64,
    omgcof: f64,
    sinmao: f64,
    t2cof: f64,
    t3cof: f64,
    t4cof: f64,
    t5cof: f64,
    x1mth2: f64,
    x7thm1: f64,
    mdot: f64,
    nodedot: f64,
    xlcof: f64,
    xmcof: f64,
    nodecf: f64,
}

impl Propagator {
    /// Initializes the propagator for one element set.
    pub fn new(el: &OrbitalElements, gravity: GravityModel) -> Result<Self, PropagationError> {
        let ecco = el.eccentricity;
        let inclo = el.inclination_deg * DEG2RAD;
        let nodeo = el.raan_deg * DEG2RAD;
        let argpo = el.arg_perigee_deg * DEG2RAD;
        let mo = el.mean_anomaly_deg * DEG2RAD;
        let no_kozai = el.mean_motion_rev_day * TWO_PI / 1440.0;
        let bstar = el.bstar;

        if !(0.0..1.0).contains(&ecco) {
            return Err(PropagationError::Diverged("eccentricity out of [0, 1)"));
        }
        if no_kozai <= 0.0 {
            return Err(PropagationError::Diverged("non-positive mean motion"));
        }

        let j3oj2 = if gravity.j2 != 0.0 {
            gravity.j3 / gravity.j2
        } else {
            0.0
        };
        let eccsq = ecco * ecco;
        let omeosq = 1.0 - eccsq;
        let rteosq = omeosq.sqrt();
        let cosio = inclo.cos();
        let cosio2 = cosio * cosio;

        // Recover the Brouwer mean motion from the Kozai value.
        let ak = (gravity.ke / no_kozai).powf(X2O3);
        let d1 = 0.75 * gravity.j2 * (3.0 * cosio2 - 1.0) / (rteosq * omeosq);
        let mut del = d1 / (ak * ak);
        let adel = ak * (1.0 - del * del - del * (1.0 / 3.0 + 134.0 * del * del / 81.0));
        del = d1 / (adel * adel);
        let no_unkozai = no_kozai / (1.0 + del);

        if no_unkozai <= TWO_PI / 225.0 {
            return Err(PropagationError::DeepSpace);
        }

        let ao = (gravity.ke / no_unkozai).powf(X2O3);
        let sinio = inclo.sin();
        let po = ao * omeosq;
        let con42 = 1.0 - 5.0 * cosio2;
        let con41 = -con42 - cosio2 - cosio2;
        let posq = po * po;
        let rp = ao * (1.0 - ecco);

        if rp < 1.0 {
            return Err(PropagationError::Diverged("perigee below the surface"));
        }

        let perige = (rp - 1.0) * gravity.radius_earth_km;

        // Atmospheric density fitting parameter s4 and (q0 - s)^4.
        let mut sfour = 78.0;
        let mut qzms24 = ((120.0 - 78.0) / gravity.radius_earth_km).powi(4);
        if perige < 156.0 {
            sfour = perige - 78.0;
            if perige < 98.0 {
                sfour = 20.0;
            }
            qzms24 = ((120.0 - sfour) / gravity.radius_earth_km).powi(4);
        }
        let sfour = sfour / gravity.radius_earth_km + 1.0;

        let pinvsq = 1.0 / posq;
        let tsi = 1.0 / (ao - sfour);
        let eta = ao * ecco * tsi;
        let etasq = eta * eta;
        let eeta = ecco * eta;
        let psisq = (1.0 - etasq).abs();
        let coef = qzms24 * tsi.powi(4);
        let coef1 = coef / psisq.powf(3.5);

        let cc2 = coef1
            * no_unkozai
            * (ao * (1.0 + 1.5 * etasq + eeta * (4.0 + etasq))
                + 0.375 * gravity.j2 * tsi / psisq
                    * con41
                    * (8.0 + 3.0 * etasq * (8.0 + etasq)));
        let cc1 = bstar * cc2;
        let mut cc3 = 0.0;
        if ecco > 1.0e-4 {
            cc3 = -2.0 * coef * tsi * j3oj2 * no_unkozai * sinio / ecco;
        }
        let x1mth2 = 1.0 - cosio2;
        let cc4 = 2.0
            * no_unkozai
            * coef1
            * ao
            * omeosq
            * (eta * (2.0 + 0.5 * etasq) + ecco * (0.5 + 2.0 * etasq)
                - gravity.j2 * tsi / (ao * psisq)
                    * (-3.0 * con41 * (1.0 - 2.0 * eeta + etasq * (1.5 - 0.5 * eeta))
                        + 0.75
                            * x1mth2
                            * (2.0 * etasq - eeta * (1.0 + etasq))
                            * (2.0 * argpo).cos()));
        let cc5 =
            2.0 * coef1 * ao * omeosq * (1.0 + 2.75 * (etasq + eeta) + eeta * etasq);

        let cosio4 = cosio2 * cosio2;
        let temp1 = 1.5 * gravity.j2 * pinvsq * no_unkozai;
        let temp2 = 0.5 * temp1 * gravity.j2 * pinvsq;
        let temp3 = -0.46875 * gravity.j4 * pinvsq * pinvsq * no_unkozai;
        let mdot = no_unkozai
            + 0.5 * temp1 * rteosq * con41
            + 0.0625 * temp2 * rteosq * (13.0 - 78.0 * cosio2 + 137.0 * cosio4);
        let argpdot = -0.5 * temp1 * con42
            + 0.0625 * temp2 * (7.0 - 114.0 * cosio2 + 395.0 * cosio4)
            + temp3 * (3.0 - 36.0 * cosio2 + 49.0 * cosio4);
        let xhdot1 = -temp1 * cosio;
        let nodedot = xhdot1
            + (0.5 * temp2 * (4.0 - 19.0 * cosio2) + 2.0 * temp3 * (3.0 - 7.0 * cosio2))
                * cosio;
        let omgcof = bstar * cc3 * argpo.cos();
        let mut xmcof = 0.0;
        if ecco > 1.0e-4 {
            xmcof = -X2O3 * coef * bstar / eeta;
        }
        let nodecf = 3.5 * omeosq * xhdot1 * cc1;
        let t2cof = 1.5 * cc1;
        // Avoid division by zero for inclinations near 180 deg.
        let xlcof = if (cosio + 1.0).abs() > 1.5e-12 {
            -0.25 * j3oj2 * sinio * (3.0 + 5.0 * cosio) / (1.0 + cosio)
        } else {
            -0.25 * j3oj2 * sinio * (3.0 + 5.0 * cosio) / 1.5e-12
        };
        let aycof = -0.5 * j3oj2 * sinio;
        let delmo = (1.0 + eta * mo.cos()).powi(3);
        let sinmao = mo.sin();
        let x7thm1 = 7.0 * cosio2 - 1.0;

        // Low-perigee orbits use the simplified drag expansion.
        let simple = rp < 220.0 / gravity.radius_earth_km + 1.0;
        let (mut d2, mut d3, mut d4, mut t3cof, mut t4cof, mut t5cof) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        if !simple {
            let cc1sq = cc1 * cc1;
            d2 = 4.0 * ao * tsi * cc1sq;
            let temp = d2 * tsi * cc1 / 3.0;
            d3 = (17.0 * ao + sfour) * temp;
            d4 = 0.5 * temp * ao * tsi * (221.0 * ao + 31.0 * sfour) * cc1;
            t3cof = d2 + 2.0 * cc1sq;
            t4cof = 0.25 * (3.0 * d3 + cc1 * (12.0 * d2 + 10.0 * cc1sq));
            t5cof = 0.2
                * (3.0 * d4
                    + 12.0 * cc1 * d3
                    + 6.0 * d2 * d2
                    + 15.0 * cc1sq * (2.0 * d2 + cc1sq));
        }

        Ok(Self {
            gravity,
            epoch: el.epoch,
            no_unkozai,
            ecco,
            inclo,
            nodeo,
            argpo,
            mo,
            bstar,
            simple,
            aycof,
            con41,
            cc1,
            cc4,
            cc5,
            d2,
            d3,
            d4,
            delmo,
            eta,
            argpdot,
            omgcof,
            sinmao,
            t2cof,
            t3cof,
            t4cof,
            t5cof,
            x1mth2,
            x7thm1,
            mdot,
            nodedot,
            xlcof,
            xmcof,
            nodecf,
        })
    }

    /// Element-set epoch.
    pub fn epoch(&self) -> DateTime<Utc> {
        self.epoch
    }

    /// Propagates to an absolute epoch, enforcing the accuracy guard.
    pub fn state_at(&self, at: DateTime<Utc>) -> Result<StateVector, PropagationError> {
        let t_min = minutes_between(self.epoch, at);
        let offset_days = t_min.abs() / 1440.0;
        if offset_days > MAX_EPOCH_OFFSET_DAYS {
            return Err(PropagationError::EpochTooFar {
                offset_days,
                limit_days: MAX_EPOCH_OFFSET_DAYS,
            });
        }
        let (position_km, velocity_kms) = self.state_at_minutes(t_min)?;
        Ok(StateVector {
            epoch: at,
            position_km,
            velocity_kms,
        })
    }

    /// Core SGP4 step: minutes since the element epoch to TEME km and km/s.
    pub fn state_at_minutes(&self, t: f64) -> Result<(Vec3d, Vec3d), PropagationError> {
        let g = &self.gravity;

        // Secular gravity and drag.
        let xmdf = self.mo + self.mdot * t;
        let argpdf = self.argpo + self.argpdot * t;
        let nodedf = self.nodeo + self.nodedot * t;
        let mut argpm = argpdf;
        let mut mm = xmdf;
        let t2 = t * t;
        let mut nodem = nodedf + self.nodecf * t2;
        let mut tempa = 1.0 - self.cc1 * t;
        let mut tempe = self.bstar * self.cc4 * t;
        let mut templ = self.t2cof * t2;

        if !self.simple {
            let delomg = self.omgcof * t;
            let delmtemp = 1.0 + self.eta * xmdf.cos();
            let delm = self.xmcof * (delmtemp.powi(3) - self.delmo);
            let temp = delomg + delm;
            mm = xmdf + temp;
            argpm = argpdf - temp;
            let t3 = t2 * t;
            let t4 = t3 * t;
            tempa = tempa - self.d2 * t2 - self.d3 * t3 - self.d4 * t4;
            tempe += self.bstar * self.cc5 * (mm.sin() - self.sinmao);
            templ = templ + self.t3cof * t3 + t4 * (self.t4cof + t * self.t5cof);
        }

        let nm = self.no_unkozai;
        let mut em = self.ecco;
        let inclm = self.inclo;

        let am = (g.ke / nm).powf(X2O3) * tempa * tempa;
        let nm = g.ke / am.powf(1.5);
        em -= tempe;

        if !(-0.001..1.0).contains(&em) {
            return Err(PropagationError::Diverged("mean eccentricity out of range"));
        }
        if em < 1.0e-6 {
            em = 1.0e-6;
        }
        mm += self.no_unkozai * templ;
        let mut xlm = mm + argpm + nodem;

        nodem %= TWO_PI;
        argpm %= TWO_PI;
        xlm %= TWO_PI;
        mm = (xlm - argpm - nodem) % TWO_PI;

        let sinim = inclm.sin();
        let cosim = inclm.cos();

        // No deep-space contribution: periodics come straight from the
        // secular elements.
        let ep = em;
        let xincp = inclm;
        let argpp = argpm;
        let nodep = nodem;
        let mp = mm;
        let sinip = sinim;
        let cosip = cosim;

        // Long-period periodics.
        let axnl = ep * argpp.cos();
        let temp = 1.0 / (am * (1.0 - ep * ep));
        let aynl = ep * argpp.sin() + temp * self.aycof;
        let xl = mp + argpp + nodep + temp * self.xlcof * axnl;

        // Kepler's equation for E + omega.
        let u = (xl - nodep) % TWO_PI;
        let mut eo1 = u;
        let mut tem5: f64 = 9999.9;
        let mut ktr = 1;
        let (mut sineo1, mut coseo1) = (eo1.sin(), eo1.cos());
        while tem5.abs() >= 1.0e-12 && ktr <= 10 {
            sineo1 = eo1.sin();
            coseo1 = eo1.cos();
            tem5 = 1.0 - coseo1 * axnl - sineo1 * aynl;
            tem5 = (u - aynl * coseo1 + axnl * sineo1 - eo1) / tem5;
            if tem5.abs() >= 0.95 {
                tem5 = 0.95 * tem5.signum();
            }
            eo1 += tem5;
            ktr += 1;
        }

        // Short-period periodics.
        let ecose = axnl * coseo1 + aynl * sineo1;
        let esine = axnl * sineo1 - aynl * coseo1;
        let el2 = axnl * axnl + aynl * aynl;
        let pl = am * (1.0 - el2);
        if pl < 0.0 {
            return Err(PropagationError::Diverged("negative semi-latus rectum"));
        }

        let rl = am * (1.0 - ecose);
        let rdotl = am.sqrt() * esine / rl;
        let rvdotl = pl.sqrt() / rl;
        let betal = (1.0 - el2).sqrt();
        let temp = esine / (1.0 + betal);
        let sinu = am / rl * (sineo1 - aynl - axnl * temp);
        let cosu = am / rl * (coseo1 - axnl + aynl * temp);
        let su = sinu.atan2(cosu);
        let sin2u = (cosu + cosu) * sinu;
        let cos2u = 1.0 - 2.0 * sinu * sinu;
        let temp = 1.0 / pl;
        let temp1 = 0.5 * g.j2 * temp;
        let temp2 = temp1 * temp;

        let mrt = rl * (1.0 - 1.5 * temp2 * betal * self.con41)
            + 0.5 * temp1 * self.x1mth2 * cos2u;
        let su = su - 0.25 * temp2 * self.x7thm1 * sin2u;
        let xnode = nodep + 1.5 * temp2 * cosip * sin2u;
        let xinc = xincp + 1.5 * temp2 * cosip * sinip * cos2u;
        let mvt = rdotl - nm * temp1 * self.x1mth2 * sin2u / g.ke;
        let rvdot = rvdotl + nm * temp1 * (self.x1mth2 * cos2u + 1.5 * self.con41) / g.ke;

        // Orientation vectors and final state.
        let sinsu = su.sin();
        let cossu = su.cos();
        let snod = xnode.sin();
        let cnod = xnode.cos();
        let sini = xinc.sin();
        let cosi = xinc.cos();
        let xmx = -snod * cosi;
        let xmy = cnod * cosi;
        let ux = xmx * sinsu + cnod * cossu;
        let uy = xmy * sinsu + snod * cossu;
        let uz = sini * sinsu;
        let vx = xmx * cossu - cnod * sinsu;
        let vy = xmy * cossu - snod * sinsu;
        let vz = sini * cossu;

        if mrt < 1.0 {
            return Err(PropagationError::Diverged("satellite decayed"));
        }

        let vkmpersec = g.radius_earth_km * g.ke / 60.0;
        let r = Vec3d::new(
            mrt * ux * g.radius_earth_km,
            mrt * uy * g.radius_earth_km,
            mrt * uz * g.radius_earth_km,
        );
        let v = Vec3d::new(
            (mvt * ux + rvdot * vx) * vkmpersec,
            (mvt * uy + rvdot * vy) * vkmpersec,
            (mvt * uz + rvdot * vz) * vkmpersec,
        );
        Ok((r, v))
    }
}

/// One-shot propagation with the default WGS-72 constants.
pub fn propagate(
    el: &OrbitalElements,
    at: DateTime<Utc>,
) -> Result<StateVector, PropagationError> {
    Propagator::new(el, WGS72)?.state_at(at)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tle::parse_tle;
    use chrono::Duration;

    const ISS: &str = "1 25544U 98067A   20194.88612269 -.00002218  00000-0 -31515-4 0  9992\n\
                       2 25544  51.6461 221.2784 0001413  89.1723 280.4612 15.49507896236008\n";

    fn iss() -> OrbitalElements {
        parse_tle(ISS).records.pop().unwrap()
    }

    #[test]
    fn radius_consistent_with_mean_motion() {
        let el = iss();
        let state = propagate(&el, el.epoch).unwrap();
        let a = el.semi_major_axis_km();
        let r = state.radius_km();
        assert!(
            (r - a).abs() / a < 0.005,
            "radius {r} vs kepler semi-major axis {a}"
        );
    }

    #[test]
    fn propagation_is_pure() {
        let el = iss();
        let at = el.epoch + Duration::minutes(97);
        let a = propagate(&el, at).unwrap();
        let b = propagate(&el, at).unwrap();
        assert_eq!(a.position_km, b.position_km);
        assert_eq!(a.velocity_kms, b.velocity_kms);
    }

    #[test]
    fn circular_orbit_repeats_after_one_period_in_two_body_limit() {
        // With the J terms zeroed the model reduces to Kepler motion, so a
        // circular orbit must close on itself after 1/mean_motion days.
        let two_body = GravityModel {
            j2: 0.0,
            j3: 0.0,
            j4: 0.0,
            ..WGS72
        };
        let el = OrbitalElements {
            eccentricity: 0.0,
            bstar: 0.0,
            ..iss()
        };
        let prop = Propagator::new(&el, two_body).unwrap();
        let (p0, _) = prop.state_at_minutes(0.0).unwrap();
        let (p1, _) = prop.state_at_minutes(el.period_min()).unwrap();
        let gap = p1.sub(&p0).norm();
        assert!(gap < 1.0, "position gap after one period: {gap} km");
    }

    #[test]
    fn radius_variation_small_for_low_eccentricity() {
        let el = iss();
        let mut min_r = f64::INFINITY;
        let mut max_r: f64 = 0.0;
        for k in 0..96 {
            let at = el.epoch + Duration::seconds(k * 60);
            let r = propagate(&el, at).unwrap().radius_km();
            min_r = min_r.min(r);
            max_r = max_r.max(r);
        }
        assert!(el.eccentricity < 0.02);
        assert!((max_r - min_r) / min_r < 0.03);
    }

    #[test]
    fn epoch_guard() {
        let el = iss();
        let err = propagate(&el, el.epoch + Duration::days(8)).unwrap_err();
        assert!(matches!(err, PropagationError::EpochTooFar { .. }));
    }

    #[test]
    fn velocity_magnitude_is_orbital() {
        let el = iss();
        let v = propagate(&el, el.epoch).unwrap().velocity_kms.norm();
        assert!((7.0..8.2).contains(&v), "LEO speed {v} km/s");
    }
}
