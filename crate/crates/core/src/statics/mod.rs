//! Comparative statics: derivative signs, shapes of `Q(theta)` and
//! `v_B(theta)`, analytic thresholds and the fee-versus-welfare optimum.

mod verify;

pub use verify::{verify_propositions, CheckResult, VerifyGrid, VerifyReport, Witness};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diff::theta_derivative;
use crate::equilibrium::{solve_benchmark, theta0, Equilibrium};
use crate::error::{Error, Result};
use crate::model::{eta, h, validate, EconomyParams, Tolerances};
use crate::roots::bisect;
use crate::welfare::buyer_welfare;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    Increasing,
    UShaped,
    Decreasing,
}

impl Shape {
    /// Expected sign of the derivative at `theta` given the turning point.
    pub fn sign_at(self, theta: f64, turning: Option<f64>) -> i8 {
        match (self, turning) {
            (Shape::Increasing, _) => 1,
            (Shape::Decreasing, _) => -1,
            (Shape::UShaped, Some(t)) if theta > t => 1,
            (Shape::UShaped, _) => -1,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Equilibrium quantities that can be differentiated in `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    PB,
    PC,
    PiB,
    KB,
    Q,
    VB,
    #[serde(rename = "v_0")]
    V0,
    AlphaStar,
}

impl Field {
    pub const ALL: [Field; 8] = [
        Field::PB,
        Field::PC,
        Field::PiB,
        Field::KB,
        Field::Q,
        Field::VB,
        Field::V0,
        Field::AlphaStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::PB => "p_b",
            Field::PC => "p_c",
            Field::PiB => "pi_b",
            Field::KB => "k_b",
            Field::Q => "q",
            Field::VB => "v_b",
            Field::V0 => "v_0",
            Field::AlphaStar => "alpha_star",
        }
    }

    pub fn value(self, eq: &Equilibrium) -> Result<f64> {
        Ok(match self {
            Field::PB => eq.p_b,
            Field::PC => eq.p_c,
            Field::PiB => eq.pi_b,
            Field::KB => eq.k_b,
            Field::Q => eq.q_crypto,
            Field::VB => buyer_welfare(eq)?.v_b,
            Field::V0 => buyer_welfare(eq)?.v_0,
            Field::AlphaStar => eq.alpha_star,
        })
    }
}

impl FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Field::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown field `{s}`"))
    }
}

/// Finite-difference derivative of `field` in `theta`.
pub fn derivative(
    params: &EconomyParams,
    field: Field,
    step: f64,
    tol: &Tolerances,
) -> Result<f64> {
    validate(params).map_err(Error::InvalidParams)?;
    theta_derivative(params, step, |t| {
        field.value(&solve_benchmark(&params.with_theta(t), tol)?)
    })
}

/// `A(theta)`; `dQ/dtheta > 0` exactly when `A < 0`.
pub fn a_of_theta(pi: f64, phi: f64, theta: f64) -> f64 {
    let g = (1.0 - theta) / theta;
    let e = eta(pi, phi);
    g * (1.0 - pi) * (2.0 * e - h(pi, phi)) + 2.0 * pi * (phi - (1.0 - phi) * (2.0 - pi))
}

/// Zero of `A` in `g`.
pub fn g_star(pi: f64, phi: f64) -> f64 {
    2.0 * pi * (2.0 - pi - phi * (3.0 - pi))
        / ((1.0 - pi) * (1.0 - pi * (1.0 - phi) + phi * pi / (2.0 - pi)))
}

/// `g` at the regime boundary.
pub fn g0(pi: f64, phi: f64) -> Result<f64> {
    let t = theta0(pi, phi)?;
    Ok((1.0 - t) / t)
}

pub fn phi1(pi: f64) -> f64 {
    (2.0 - pi) / (3.0 - pi)
}

/// Root of `g*(phi) = g0(phi)` on `(0, phi1)`.
pub fn phi0(pi: f64) -> Result<f64> {
    let tol = Tolerances::default();
    bisect(
        |phi| g_star(pi, phi) - g0(pi, phi).unwrap_or(f64::NAN),
        1e-9,
        phi1(pi),
        tol.bracket,
        tol.max_iter,
    )
    .map(|r| r.x)
}

/// Root of `2 pi^3 - 3 pi^2 - 2 pi + 1` on `(0, 1/2)`.
pub fn pi_star() -> f64 {
    bisect(
        |p| 2.0 * p * p * p - 3.0 * p * p - 2.0 * p + 1.0,
        0.0,
        0.5,
        1e-17,
        200,
    )
    .map(|r| r.x)
    .expect("cubic changes sign on (0, 1/2)")
}

/// Root of `1 + (1 - pi)(theta0(phi) - 2 phi)` on `(0, 1)`; exists only for
/// `pi < 1/2`.
pub fn phi2(pi: f64) -> Result<f64> {
    let tol = Tolerances::default();
    let f = |phi: f64| 1.0 + (1.0 - pi) * (theta0(pi, phi).unwrap_or(f64::NAN) - 2.0 * phi);
    if pi > 0.5 {
        return Err(Error::RootNotBracketed {
            lo: 0.0,
            hi: 1.0,
            f_lo: f(1e-9),
            f_hi: f(1.0 - 1e-9),
        });
    }
    bisect(f, 1e-9, 1.0 - 1e-9, tol.bracket, tol.max_iter).map(|r| r.x)
}

/// `D_B(P_B)`, whose sign is the sign of `dv_B/dtheta` in coexistence.
pub fn d_b(pi: f64, phi: f64, p_b: f64) -> f64 {
    let hh = h(pi, phi);
    let k = phi / (2.0 - pi);
    let a = (1.0 - phi) * pi;
    a * a * p_b * (hh * p_b - 2.0 * k) / (hh * p_b - k).powi(2)
        + 2.0 * phi * pi * (1.0 - pi + pi * p_b) / (2.0 - pi).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QShape {
    pub shape: Shape,
    pub theta_star: Option<f64>,
    pub g_star: f64,
    /// Case of the `phi0`/`phi1` statement, recorded independently of `shape`.
    pub analytic_case: Shape,
}

/// Shape of `Q(theta)` on the coexistence range.
pub fn classify_q_shape(pi: f64, phi: f64) -> Result<QShape> {
    let gs = g_star(pi, phi);
    let g_0 = g0(pi, phi)?;
    let (shape, theta_star) = if gs <= 0.0 {
        (Shape::Decreasing, None)
    } else if gs >= g_0 {
        (Shape::Increasing, None)
    } else {
        (Shape::UShaped, Some(1.0 / (1.0 + gs)))
    };
    let analytic_case = if phi >= phi1(pi) {
        Shape::Decreasing
    } else {
        match phi0(pi) {
            Ok(p0) if phi > p0 => Shape::UShaped,
            _ => Shape::Increasing,
        }
    };
    Ok(QShape {
        shape,
        theta_star,
        g_star: gs,
        analytic_case,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VbShape {
    pub shape: Shape,
    pub theta_2star: Option<f64>,
}

/// `D_B` at the regime boundary, `theta -> theta0` from above.
pub fn d_b_at_theta0(pi: f64, phi: f64, tol: &Tolerances) -> Result<f64> {
    let t0 = theta0(pi, phi)?;
    let eq = solve_benchmark(&EconomyParams::new(pi, phi, t0), tol)?;
    Ok(d_b(pi, phi, eq.p_b))
}

/// Shape of `v_B(theta)` on the coexistence range.
///
/// `D_B` increases with `P_B`, which increases with `theta`, so the shape
/// follows from the sign of `D_B` at the two ends; `theta**` is then found
/// by bisection.
pub fn classify_vb_shape(pi: f64, phi: f64, tol: &Tolerances) -> Result<VbShape> {
    let t0 = theta0(pi, phi)?;
    let db = |theta: f64| -> f64 {
        solve_benchmark(&EconomyParams::new(pi, phi, theta), tol)
            .map(|e| d_b(pi, phi, e.p_b))
            .unwrap_or(f64::NAN)
    };
    let (lo, hi) = (db(t0), db(1.0));
    let monotone = |shape| {
        Ok(VbShape {
            shape,
            theta_2star: None,
        })
    };
    if lo >= 0.0 && hi >= 0.0 {
        return monotone(Shape::Increasing);
    }
    if lo <= 0.0 && hi <= 0.0 {
        return monotone(Shape::Decreasing);
    }
    match bisect(db, t0, 1.0, tol.bracket, tol.max_iter) {
        Ok(r) => Ok(VbShape {
            shape: Shape::UShaped,
            theta_2star: Some(r.x),
        }),
        Err(_) => monotone(if db(0.5 * (t0 + 1.0)) > 0.0 {
            Shape::Increasing
        } else {
            Shape::Decreasing
        }),
    }
}

/// Analytic thresholds. Entries depending on `phi` are filled only when it
/// is given; absent thresholds are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub pi: f64,
    pub phi: Option<f64>,
    pub theta0: Option<f64>,
    pub phi0: Option<f64>,
    pub phi1: f64,
    pub phi2: Option<f64>,
    pub pi_star: f64,
    pub theta_star: Option<f64>,
    pub theta_2star: Option<f64>,
    pub q_shape: Option<Shape>,
    pub vb_shape: Option<Shape>,
}

pub fn thresholds(pi: f64, phi: Option<f64>, tol: &Tolerances) -> Result<ThresholdSet> {
    let probe = EconomyParams::new(pi, phi.unwrap_or(0.5), 1.0);
    validate(&probe).map_err(Error::InvalidParams)?;
    let mut set = ThresholdSet {
        pi,
        phi,
        theta0: None,
        phi0: phi0(pi).ok(),
        phi1: phi1(pi),
        phi2: phi2(pi).ok(),
        pi_star: pi_star(),
        theta_star: None,
        theta_2star: None,
        q_shape: None,
        vb_shape: None,
    };
    if let Some(phi) = phi {
        set.theta0 = Some(theta0(pi, phi)?);
        let q = classify_q_shape(pi, phi)?;
        let v = classify_vb_shape(pi, phi, tol)?;
        set.theta_star = q.theta_star;
        set.q_shape = Some(q.shape);
        set.theta_2star = v.theta_2star;
        set.vb_shape = Some(v.shape);
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalTheta {
    pub theta0: f64,
    /// Maximizer of the buyer fee `f_B` on `[theta0, 1]`.
    pub theta_m: f64,
    /// Maximizer of buyer welfare `v_B` on `[theta0, 1]`.
    pub theta_v: f64,
    /// `v_B(theta_v) - v_B(theta_m)`.
    pub welfare_loss: f64,
}

fn endpoint_argmax(shape: Shape, t0: f64, at_t0: f64, at_one: f64) -> f64 {
    match shape {
        Shape::Increasing => 1.0,
        Shape::Decreasing => t0,
        Shape::UShaped if at_t0 > at_one => t0,
        Shape::UShaped => 1.0,
    }
}

/// Fee-maximizing versus welfare-maximizing security level.
pub fn optimal_theta(pi: f64, phi: f64, tol: &Tolerances) -> Result<OptimalTheta> {
    validate(&EconomyParams::new(pi, phi, 1.0)).map_err(Error::InvalidParams)?;
    let t0 = theta0(pi, phi)?;
    let welfare = |theta: f64| -> Result<(f64, f64)> {
        let w = buyer_welfare(&solve_benchmark(&EconomyParams::new(pi, phi, theta), tol)?)?;
        Ok((w.f_b, w.v_b))
    };
    let (fb0, vb0) = welfare(t0)?;
    let (fb1, vb1) = welfare(1.0)?;
    let q = classify_q_shape(pi, phi)?;
    let v = classify_vb_shape(pi, phi, tol)?;
    let theta_m = endpoint_argmax(q.shape, t0, fb0, fb1);
    let theta_v = endpoint_argmax(v.shape, t0, vb0, vb1);
    let vb_at = |t: f64| if t == 1.0 { vb1 } else { vb0 };
    Ok(OptimalTheta {
        theta0: t0,
        theta_m,
        theta_v,
        welfare_loss: vb_at(theta_v) - vb_at(theta_m),
    })
}
