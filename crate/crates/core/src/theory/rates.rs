//! Closed-form moderate-deviation constants and the Legendre-type rate
//! transform `I(λ) = p · sup_{θ>0} {λ^{1/p} θ - Ψ(θ)}`.
//!
//! Two regimes are supported: d = 2 with any p >= 2, and d = 3 with p = 2.
//! In both, the rate obtained by transforming `psi_md` coincides with the
//! closed form `md_rate`, and `md_rate(lil_constant) = 1`.

use crate::error::{Error, Result};
use crate::num::Real;
use serde::Serialize;

/// Inputs to every closed-form constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateParams<T> {
    pub d: usize,
    pub p: usize,
    pub det_gamma: T,
    /// Escape probability γ(S); required for d = 3 only.
    pub gamma_escape: Option<T>,
    /// Gagliardo-Nirenberg constant κ(d, p).
    pub kappa: T,
}

impl<T: Real> RateParams<T> {
    pub fn new(d: usize, p: usize, det_gamma: T, gamma_escape: Option<T>, kappa: T) -> Result<Self> {
        check_regime(d, p)?;
        if !(det_gamma > T::zero()) {
            return Err(Error::param("det_gamma", "must be positive"));
        }
        if !(kappa > T::zero()) {
            return Err(Error::param("kappa", "must be positive"));
        }
        if d == 3 {
            match gamma_escape {
                Some(g) if g > T::zero() && g <= T::one() => {}
                _ => return Err(Error::param("gamma_escape", "d = 3 needs γ(S) in (0, 1]")),
            }
        }
        Ok(RateParams {
            d,
            p,
            det_gamma,
            gamma_escape,
            kappa,
        })
    }

    /// Unit det Γ, γ and κ.
    pub fn unit(d: usize, p: usize) -> Result<Self> {
        Self::new(d, p, T::one(), (d == 3).then_some(T::one()), T::one())
    }

    fn gamma(&self) -> T {
        self.gamma_escape.unwrap_or(T::one())
    }
}

/// Accepts (2, p >= 2) and (3, 2): the cases of `p(d - 2) < d`, `d >= 2`.
pub fn check_regime(d: usize, p: usize) -> Result<()> {
    match (d, p) {
        (2, p) if p >= 2 => Ok(()),
        (3, 2) => Ok(()),
        _ => Err(Error::UnsupportedParams { d, p }),
    }
}

/// Ψ(θ) for the moment generating series of J_n.
///
/// d = 2: `(1/p) (2(p-1)/p)^{p-1} (2πθ)^p √det Γ κ^{2p}`;
/// d = 3: `2 (3/4)^3 (γθ)^4 det Γ^{-1} κ^8`.
pub fn psi_md<T: Real>(theta: T, params: &RateParams<T>) -> Result<T> {
    if !(theta > T::zero()) {
        return Err(Error::param("theta", "must be positive"));
    }
    let RateParams {
        d, p, det_gamma, kappa, ..
    } = *params;
    check_regime(d, p)?;
    let pf = T::from_usize_lossy(p);
    Ok(match d {
        2 => {
            let two_pi_theta = T::lit(2.0) * T::PI() * theta;
            (T::lit(2.0) * (pf - T::one()) / pf).powi(p as i32 - 1) / pf
                * two_pi_theta.powi(p as i32)
                * det_gamma.sqrt()
                * kappa.powi(2 * p as i32)
        }
        _ => {
            T::lit(2.0) * T::lit(0.75).powi(3) * (params.gamma() * theta).powi(4) / det_gamma
                * kappa.powi(8)
        }
    })
}

/// Moderate-deviation rate (positive; the tail limit is its negative).
///
/// d = 2: `(p/2) (2π)^{-p/(p-1)} det Γ^{-1/(2(p-1))} κ^{-2p/(p-1)} λ^{1/(p-1)}`;
/// d = 3: `det Γ^{1/3} γ^{-4/3} κ^{-8/3} λ^{2/3}`.
pub fn md_rate<T: Real>(params: &RateParams<T>, lambda: T) -> Result<T> {
    if !(lambda > T::zero()) {
        return Err(Error::param("lambda", "must be positive"));
    }
    let RateParams {
        d, p, det_gamma, kappa, ..
    } = *params;
    check_regime(d, p)?;
    let pf = T::from_usize_lossy(p);
    let q = pf - T::one();
    Ok(match d {
        2 => {
            pf / T::lit(2.0)
                * (T::lit(2.0) * T::PI()).powf(-pf / q)
                * det_gamma.powf(-T::one() / (T::lit(2.0) * q))
                * kappa.powf(-T::lit(2.0) * pf / q)
                * lambda.powf(q.recip())
        }
        _ => {
            let third = T::lit(1.0 / 3.0);
            det_gamma.powf(third)
                * params.gamma().powf(-T::lit(4.0) * third)
                * kappa.powf(-T::lit(8.0) * third)
                * lambda.powf(T::lit(2.0) * third)
        }
    })
}

/// Almost-sure limsup constant of the normalised J_n.
///
/// d = 2: `(2π)^p (2/p)^{p-1} √det Γ κ^{2p}`;
/// d = 3: `γ² det Γ^{-1/2} κ^4`.
pub fn lil_constant<T: Real>(params: &RateParams<T>) -> Result<T> {
    let RateParams {
        d, p, det_gamma, kappa, ..
    } = *params;
    check_regime(d, p)?;
    let pf = T::from_usize_lossy(p);
    Ok(match d {
        2 => {
            (T::lit(2.0) * T::PI()).powi(p as i32)
                * (T::lit(2.0) / pf).powi(p as i32 - 1)
                * det_gamma.sqrt()
                * kappa.powi(2 * p as i32)
        }
        _ => params.gamma().powi(2) / det_gamma.sqrt() * kappa.powi(4),
    })
}

/// A log-moment generating limit Ψ on θ > 0 with its order p.
pub struct PsiSpec<'a, T> {
    pub p: usize,
    psi: Box<dyn Fn(T) -> T + Send + Sync + 'a>,
    /// Caller's assertion that Ψ is nondecreasing and convex.
    pub monotone_convex: bool,
}

impl<'a, T: Real> PsiSpec<'a, T> {
    pub fn new(p: usize, psi: impl Fn(T) -> T + Send + Sync + 'a) -> Self {
        PsiSpec {
            p,
            psi: Box::new(psi),
            monotone_convex: true,
        }
    }

    /// Ψ of the moderate-deviation regime described by `params`.
    pub fn moderate_deviation(params: RateParams<T>) -> Self {
        PsiSpec::new(params.p, move |theta| {
            psi_md(theta, &params).expect("validated parameters")
        })
    }

    pub fn eval(&self, theta: T) -> T {
        (self.psi)(theta)
    }
}

/// Doubling steps allowed while bracketing before the objective is
/// declared unbounded.
const MAX_DOUBLINGS: usize = 2000;

/// `I(λ) = p · sup_{θ>0} {λ^{1/p} θ - Ψ(θ)}` by bracketing in θ (doubling
/// from θ = 1) followed by golden-section search over log θ.
pub fn legendre_rate<T: Real>(psi: &PsiSpec<'_, T>, lambda: T) -> Result<T> {
    if !(lambda > T::zero()) {
        return Err(Error::param("lambda", "must be positive"));
    }
    if psi.p == 0 {
        return Err(Error::param("p", "must be at least 1"));
    }
    let slope = lambda.powf(T::from_usize_lossy(psi.p).recip());
    let obj = |u: T| {
        let theta = u.exp();
        slope * theta - psi.eval(theta)
    };
    let ln2 = T::LN_2();
    let u0 = T::zero();
    let f0 = obj(u0);
    let (mut a, mut b);
    if obj(u0 + ln2) > f0 {
        // climb
        let (mut prev, mut cur) = (u0, u0 + ln2);
        let mut fcur = obj(cur);
        let mut steps = 0;
        loop {
            let next = cur + ln2;
            let fnext = obj(next);
            if !fnext.is_finite() || steps >= MAX_DOUBLINGS {
                return Err(Error::UnboundedObjective(format!(
                    "λ^(1/p)θ - Ψ(θ) still increasing at θ = e^{}",
                    next.as_f64()
                )));
            }
            if fnext <= fcur {
                a = prev;
                b = next;
                break;
            }
            prev = cur;
            cur = next;
            fcur = fnext;
            steps += 1;
        }
    } else {
        // descend toward θ -> 0
        let (mut prev, mut cur) = (u0 + ln2, u0);
        let mut fcur = f0;
        let mut steps = 0;
        loop {
            let next = cur - ln2;
            let fnext = obj(next);
            if fnext <= fcur {
                a = next;
                b = prev;
                break;
            }
            if steps >= MAX_DOUBLINGS || next.exp() == T::zero() {
                // supremum approached as θ -> 0+, where the objective -> 0
                return Ok(T::from_usize_lossy(psi.p) * fnext.max(T::zero()));
            }
            prev = cur;
            cur = next;
            fcur = fnext;
            steps += 1;
        }
    }
    let inv_phi = T::lit((5.0f64.sqrt() - 1.0) / 2.0);
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut fc, mut fe) = (obj(c), obj(e));
    for _ in 0..300 {
        if (b - a).abs() < T::lit(1e-13) {
            break;
        }
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = obj(e);
        }
    }
    let best = fc.max(fe).max(obj((a + b) / T::lit(2.0)));
    Ok(T::from_usize_lossy(psi.p) * best)
}

/// θ_0 making λ_0 the maximiser of `λ^{1/p} θ_0 - I(λ)/p` in the d = 2
/// regime: `(1/2)(p/(p-1)) (2π)^{-p/(p-1)} det Γ^{-1/(2(p-1))}
/// κ^{-2p/(p-1)} λ_0^{1/(p(p-1))}`, i.e. `θ_0 = Ψ'^{-1}(λ_0^{1/p})`.
pub fn distinguishing_theta<T: Real>(params: &RateParams<T>, lambda0: T) -> Result<T> {
    if params.d != 2 {
        return Err(Error::UnsupportedParams {
            d: params.d,
            p: params.p,
        });
    }
    check_regime(params.d, params.p)?;
    let pf = T::from_usize_lossy(params.p);
    let q = pf - T::one();
    Ok(T::lit(0.5) * pf / q
        * (T::lit(2.0) * T::PI()).powf(-pf / q)
        * params.det_gamma.powf(-T::one() / (T::lit(2.0) * q))
        * params.kappa.powf(-T::lit(2.0) * pf / q)
        * lambda0.powf((pf * q).recip()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distinguishability<T> {
    pub holds: bool,
    pub theta0: T,
    /// Grid point maximising `λ^{1/p} θ_0 - I(λ)/p`.
    pub argmax: T,
    /// Grid point nearest λ_0.
    pub nearest: T,
    /// Objective gap between the maximiser and the runner-up.
    pub margin: T,
    /// `φ(λ_0) - max φ(λ_0 ± 1/2)` over the offsets inside `(0, 4 λ_0]`;
    /// stays positive however fine the grid.
    pub offset_gap: T,
}

/// Evaluates `φ(λ) = λ^{1/p} θ_0 - I(λ)/p` on `points` equally spaced
/// λ in `(0, 4 λ_0]` and checks that the maximiser is the grid point
/// nearest λ_0 with a positive gap to the runner-up.
pub fn check_distinguishable<T: Real>(
    params: &RateParams<T>,
    lambda0: T,
    points: usize,
) -> Result<Distinguishability<T>> {
    if points < 2 {
        return Err(Error::param("points", "need at least two grid points"));
    }
    let theta0 = distinguishing_theta(params, lambda0)?;
    let top = T::lit(4.0) * lambda0;
    let spacing = top / T::from_usize_lossy(points);
    let pinv = T::from_usize_lossy(params.p).recip();
    let mut best = (T::neg_infinity(), T::zero());
    let mut second = T::neg_infinity();
    let mut nearest = T::zero();
    for i in 1..=points {
        let lambda = spacing * T::from_usize_lossy(i);
        let value = distinguishing_objective(params, theta0, lambda, pinv)?;
        if value > best.0 {
            second = best.0;
            best = (value, lambda);
        } else if value > second {
            second = value;
        }
        if (lambda - lambda0).abs() < (nearest - lambda0).abs() {
            nearest = lambda;
        }
    }
    let margin = best.0 - second;
    let half = T::lit(0.5);
    let mut rival = T::neg_infinity();
    for lambda in [lambda0 - half, lambda0 + half] {
        if lambda > T::zero() && lambda <= top {
            rival = rival.max(distinguishing_objective(params, theta0, lambda, pinv)?);
        }
    }
    let offset_gap = distinguishing_objective(params, theta0, lambda0, pinv)? - rival;
    Ok(Distinguishability {
        holds: best.1 == nearest && margin > T::zero(),
        theta0,
        argmax: best.1,
        nearest,
        margin,
        offset_gap,
    })
}

/// `λ^{1/p} θ_0 - I(λ)/p` with the closed-form rate.
pub fn distinguishing_objective<T: Real>(params: &RateParams<T>, theta0: T, lambda: T, pinv: T) -> Result<T> {
    Ok(lambda.powf(pinv) * theta0 - md_rate(params, lambda)? * pinv)
}
