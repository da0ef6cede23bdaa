//! Deterministic annealed recursion `r_{n+1} = (r_n^s + b - 1) / b` with
//! `r_0 = e^h`, its free energy, the epsilon sequence that halves the free
//! energy at each step, and fits of the singular behaviour near `h = 0`.

use crate::error::{Error, Result};
use crate::model::{branch_average, ModelParams, Regime};
use crate::stats::ols;

/// Once `log r_n` exceeds this, every remaining correction is below
/// `(b-1) e^{-100}` and the free energy is read off in closed form.
pub const RHO_BIG: f64 = 50.0;

pub const DEFAULT_MAX_LEVELS: usize = 1_000_000;

/// Target accuracy of `|F̂(0, a_0) - 1|` when locating `a_0`.
pub const A0_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealedState {
    pub level: usize,
    /// `log r_n`
    pub rho: f64,
}

impl AnnealedState {
    pub fn initial(params: &ModelParams) -> Self {
        Self {
            level: 0,
            rho: params.h,
        }
    }
}

/// One level of the annealed map.
///
/// The child sum is formed by the same left fold as
/// [`combine_children`](crate::model::combine_children), so a disorder-free
/// population tracks this recursion bit for bit.
pub fn annealed_step(state: AnnealedState, params: &ModelParams) -> AnnealedState {
    let sum: f64 = std::iter::repeat_n(state.rho, params.s).sum();
    AnnealedState {
        level: state.level + 1,
        rho: branch_average(sum, params.b),
    }
}

/// `log r_levels`, starting from `log r_0 = h`.
pub fn annealed_rho(params: &ModelParams, levels: usize) -> f64 {
    let mut st = AnnealedState::initial(params);
    for _ in 0..levels {
        st = annealed_step(st, params);
    }
    st.rho
}

/// Finite-volume annealed free energy `log r_N / s^N`.
pub fn annealed_partial(params: &ModelParams, levels: usize) -> f64 {
    annealed_rho(params, levels) / (params.s as f64).powi(levels as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Localized,
    Delocalized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyValue {
    /// Free energy. Underflows to 0 for localized points with roughly
    /// `h < 2e-3` at `s = 2`; `log_value` stays exact there.
    pub value: f64,
    /// `ln(value)`, `-inf` when delocalized.
    pub log_value: f64,
    pub levels_used: usize,
    pub phase: Phase,
}

impl FreeEnergyValue {
    fn delocalized(levels_used: usize) -> Self {
        Self {
            value: 0.0,
            log_value: f64::NEG_INFINITY,
            levels_used,
            phase: Phase::Delocalized,
        }
    }
}

/// Free energy of the annealed model (the disorder-free model when
/// `beta = 0`; `beta` is ignored here).
///
/// Exits:
/// * `log r_n <= 0` at any level: the orbit stays in `r <= 1`, so `F = 0`.
/// * `b != s` and the orbit decreases, or moves by less than `tol * |log r_n|`:
///   it sits between the two fixed points of the map (or on one) and
///   converges to the lower one, so `F = 0`.
/// * `log r_n >= RHO_BIG`: `F = (log r_n - log b / (s-1)) / s^n` up to a
///   tail smaller than `(b-1) e^{-s log r_n} / ((s-1) s^n)`, which must be
///   below `tol`.
pub fn annealed_free_energy(
    params: &ModelParams,
    tol: f64,
    max_levels: usize,
) -> Result<FreeEnergyValue> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be > 0, got {tol}")));
    }
    let sf = params.s as f64;
    let bf = params.b as f64;
    let equal = params.regime() == Regime::Equal;
    let mut st = AnnealedState::initial(params);
    loop {
        if st.rho <= 0.0 {
            return Ok(FreeEnergyValue::delocalized(st.level));
        }
        if st.rho >= RHO_BIG {
            let scale = sf.powi(st.level as i32);
            let tail = (bf - 1.0) * (-sf * st.rho).exp() / ((sf - 1.0) * scale);
            if tail < tol {
                let core = st.rho - bf.ln() / (sf - 1.0);
                return Ok(FreeEnergyValue {
                    value: core / scale,
                    log_value: core.ln() - st.level as f64 * sf.ln(),
                    levels_used: st.level,
                    phase: Phase::Localized,
                });
            }
        }
        if st.level >= max_levels {
            return Err(Error::NotConverged {
                levels: st.level,
                estimate: st.rho / sf.powi(st.level as i32),
            });
        }
        let next = annealed_step(st, params);
        if !equal && next.rho < RHO_BIG {
            let delta = next.rho - st.rho;
            if delta < 0.0 || delta.abs() < tol * st.rho.abs() {
                return Ok(FreeEnergyValue::delocalized(next.level));
            }
        }
        st = next;
    }
}

/// `F̂(0, eps) = F(0, log(1 + eps))`.
pub fn free_energy_eps(params: &ModelParams, eps: f64) -> Result<FreeEnergyValue> {
    annealed_free_energy(&params.with_h(eps.ln_1p()), 1e-14, DEFAULT_MAX_LEVELS)
}

/// The decreasing sequence `a_0 > a_1 > ...` with `F̂(0, a_0) = 1` and
/// `a_{n+1} = (s a_n + 1)^{1/s} - 1`, so that `F̂(0, a_n) = s^{-n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSequence {
    pub s: usize,
    pub a: Vec<f64>,
}

impl EpsilonSequence {
    pub fn next_term(s: usize, a: f64) -> f64 {
        ((s as f64 * a).ln_1p() / s as f64).exp_m1()
    }

    /// `v_n = 1 / a_n`, which grows like `(s-1) n / 2`.
    pub fn inverse(&self, n: usize) -> f64 {
        1.0 / self.a[n]
    }
}

pub fn build_epsilon_sequence(params: &ModelParams, n_terms: usize) -> Result<EpsilonSequence> {
    params.validate()?;
    params.require_equal("the epsilon sequence")?;
    if n_terms == 0 {
        return Err(Error::InvalidParams("n_terms must be >= 1".into()));
    }
    let a0 = solve_unit_free_energy(params)?;
    let mut a = Vec::with_capacity(n_terms);
    a.push(a0);
    while a.len() < n_terms {
        let last = *a.last().unwrap();
        a.push(EpsilonSequence::next_term(params.s, last));
    }
    Ok(EpsilonSequence { s: params.s, a })
}

fn solve_unit_free_energy(params: &ModelParams) -> Result<f64> {
    let f = |eps: f64| free_energy_eps(params, eps).map(|v| v.value);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi)? < 1.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Bracket(
                "no eps with F̂(0, eps) >= 1 below 1e12".into(),
            ));
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if (v - 1.0).abs() < A0_TOLERANCE {
            return Ok(mid);
        }
        if v < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = f(mid)?;
    if (v - 1.0).abs() < A0_TOLERANCE {
        Ok(mid)
    } else {
        Err(Error::Bracket(format!(
            "bisection for a_0 stalled at {mid} (F̂ = {v})"
        )))
    }
}

/// Least-squares fit of `-log F̂(0, eps)` against `1 / eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest `|y - fit| / |y|` over the grid.
    pub residual: f64,
}

pub fn fit_singularity(params: &ModelParams, eps_grid: &[f64]) -> Result<SingularityFit> {
    params.validate()?;
    params.require_equal("the essential-singularity fit")?;
    if eps_grid.len() < 2 {
        return Err(Error::InvalidParams("need at least two grid points".into()));
    }
    let mut xs = Vec::with_capacity(eps_grid.len());
    let mut ys = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!(
                "grid point eps = {eps} is not positive"
            )));
        }
        let v = free_energy_eps(params, eps)
            .map_err(|e| Error::Domain(format!("grid point eps = {eps}: {e}")))?;
        if v.phase == Phase::Delocalized {
            return Err(Error::Domain(format!(
                "grid point eps = {eps}: free energy is 0"
            )));
        }
        xs.push(1.0 / eps);
        ys.push(-v.log_value);
    }
    let (slope, intercept) = ols(&xs, &ys);
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| ((y - (slope * x + intercept)) / y).abs())
        .fold(0.0, f64::max);
    Ok(SingularityFit {
        slope,
        intercept,
        residual,
    })
}

/// Smallest `c` in `[1, c_max]` such that
/// `c^{-1} e^{-c/h} <= F(h) <= c e^{-1/(c h)}` on every grid point, or
/// `None` if even `c_max` fails. Both sides loosen as `c` grows.
pub fn two_sided_constant(params: &ModelParams, h_grid: &[f64], c_max: f64) -> Result<Option<f64>> {
    params.validate()?;
    let mut logs = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("grid point h = {h} is not positive")));
        }
        let v = annealed_free_energy(&params.with_h(h), 1e-14, DEFAULT_MAX_LEVELS)?;
        logs.push((h, v.log_value));
    }
    let holds = |c: f64| {
        logs.iter().all(|&(h, lf)| {
            let lower = -c.ln() - c / h;
            let upper = c.ln() - 1.0 / (c * h);
            lower <= lf && lf <= upper
        })
    };
    if !holds(c_max) {
        return Ok(None);
    }
    if holds(1.0) {
        return Ok(Some(1.0));
    }
    let (mut lo, mut hi) = (1.0, c_max);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Slope of `log F(0, h)` against `log h` over the grid.
pub fn critical_exponent_fit(params: &ModelParams, h_grid: &[f64]) -> Result<f64> {
    params.validate()?;
    let mut xs = Vec::with_capacity(h_grid.len());
    let mut ys = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let v = annealed_free_energy(&params.with_h(h), 1e-14, DEFAULT_MAX_LEVELS)?;
        if v.phase == Phase::Delocalized {
            return Err(Error::Domain(format!(
                "grid point h = {h}: free energy is 0"
            )));
        }
        xs.push(h.ln());
        ys.push(v.log_value);
    }
    Ok(ols(&xs, &ys).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(b: usize, s: usize, h: f64) -> ModelParams {
        ModelParams::new(b, s, 0.0, h).unwrap()
    }

    /// Independent evaluation of the limit: iterate the raw map on `r` and
    /// accumulate `log r_n / s^n` until it stops changing. Only usable for
    /// moderate `h` where `r_n` grows quickly enough.
    fn brute_free_energy(b: usize, s: usize, h: f64) -> f64 {
        let (bf, sf) = (b as f64, s as f64);
        // log r_{n+1} = s log r_n - log b + log(1 + (b-1) r_n^{-s})
        let mut rho = h;
        let mut acc = h;
        let mut scale = 1.0;
        for _ in 0..200 {
            let corr = ((bf - 1.0) * (-sf * rho).exp()).ln_1p() - bf.ln();
            scale *= sf;
            acc += corr / scale;
            rho = sf * rho + corr;
        }
        acc
    }

    #[test]
    fn step_examples() {
        let st = annealed_step(AnnealedState { level: 0, rho: 0.0 }, &p(2, 2, 0.0));
        assert_eq!(st, AnnealedState { level: 1, rho: 0.0 });
        let st = annealed_step(
            AnnealedState {
                level: 0,
                rho: 3f64.ln(),
            },
            &p(2, 2, 0.0),
        );
        assert_relative_eq!(st.rho, 5f64.ln(), max_relative = 1e-15);
        let st = annealed_step(AnnealedState { level: 4, rho: 1.0 }, &p(2, 3, 0.0));
        let direct = ((3f64.exp() + 1.0) / 2.0).ln();
        assert_relative_eq!(st.rho, direct, max_relative = 1e-15);
        assert_relative_eq!(st.rho, 2.355_440_171_013_797, max_relative = 1e-9);
        assert_eq!(st.level, 5);
    }

    #[test]
    fn delocalized_cases() {
        for h in [0.0, -0.5, -3.0] {
            let v = annealed_free_energy(&p(2, 2, h), 1e-12, DEFAULT_MAX_LEVELS).unwrap();
            assert_eq!(v.value, 0.0);
            assert_eq!(v.phase, Phase::Delocalized);
        }
        // b > s has a positive annealed critical point
        let v = annealed_free_energy(&p(3, 2, 0.05), 1e-12, DEFAULT_MAX_LEVELS).unwrap();
        assert_eq!(v.phase, Phase::Delocalized);
        // s > b: negative h is captured by the stable fixed point below 1
        let v = annealed_free_energy(&p(2, 3, -0.2), 1e-12, DEFAULT_MAX_LEVELS).unwrap();
        assert_eq!(v.phase, Phase::Delocalized);
    }

    #[test]
    fn localized_matches_brute_force() {
        for &(b, s, h) in &[
            (2, 2, 1.0),
            (2, 2, 0.4),
            (3, 3, 0.8),
            (2, 3, 0.3),
            (3, 2, 2.0),
        ] {
            let v = annealed_free_energy(&p(b, s, h), 1e-14, DEFAULT_MAX_LEVELS).unwrap();
            assert_eq!(v.phase, Phase::Localized);
            assert_relative_eq!(v.value, brute_free_energy(b, s, h), max_relative = 1e-12);
            assert_relative_eq!(v.log_value, v.value.ln(), max_relative = 1e-12);
        }
    }

    #[test]
    fn regression_free_energy_at_h_one() {
        // Pinned from the brute-force iteration above.
        let v = annealed_free_energy(&p(2, 2, 1.0), 1e-12, DEFAULT_MAX_LEVELS).unwrap();
        assert_relative_eq!(v.value, brute_free_energy(2, 2, 1.0), max_relative = 1e-13);
        assert_relative_eq!(v.value, FREE_ENERGY_H1_S2, max_relative = 1e-12);
    }

    const FREE_ENERGY_H1_S2: f64 = 0.385_607_630_287_023_43;

    #[test]
    fn not_converged_near_criticality() {
        let e = annealed_free_energy(&p(2, 2, 1e-3), 1e-12, 100).unwrap_err();
        match e {
            Error::NotConverged { levels, estimate } => {
                assert_eq!(levels, 100);
                assert!(estimate > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn partial_values_decrease_to_limit() {
        let params = p(2, 2, 0.7);
        let f = annealed_free_energy(&params, 1e-14, DEFAULT_MAX_LEVELS)
            .unwrap()
            .value;
        let mut prev = f64::INFINITY;
        for n in 0..40 {
            let fn_ = annealed_partial(&params, n);
            assert!(fn_ <= prev && fn_ >= f - 1e-15);
            prev = fn_;
        }
    }

    #[test]
    fn epsilon_sequence_recursion_and_scaling() {
        let params = p(2, 2, 0.0);
        let seq = build_epsilon_sequence(&params, 21).unwrap();
        let f0 = free_energy_eps(&params, seq.a[0]).unwrap().value;
        assert!((f0 - 1.0).abs() < A0_TOLERANCE);
        for w in seq.a.windows(2) {
            assert!(w[1] < w[0]);
            assert_eq!(EpsilonSequence::next_term(2, w[0]), w[1]);
            let direct = (2.0 * w[0] + 1.0).sqrt() - 1.0;
            assert_relative_eq!(w[1], direct, max_relative = 1e-14);
        }
        for (n, &a) in seq.a.iter().enumerate() {
            let f = free_energy_eps(&params, a).unwrap().value;
            assert_relative_eq!(f, 0.5f64.powi(n as i32), max_relative = 1e-8);
        }
    }

    #[test]
    fn epsilon_sequence_requires_equal_regime() {
        assert!(matches!(
            build_epsilon_sequence(&p(2, 3, 0.0), 3),
            Err(Error::Domain(_))
        ));
        assert!(build_epsilon_sequence(&p(2, 2, 0.0), 0).is_err());
    }

    #[test]
    fn epsilon_sequence_asymptotics() {
        // n a_n -> 2/(s-1); the recursion is closed form so run it directly.
        for s in [2usize, 3] {
            let mut a = 1.0;
            let n = 10_000;
            for _ in 0..n {
                a = EpsilonSequence::next_term(s, a);
            }
            let ratio = n as f64 * a * (s as f64 - 1.0) / 2.0;
            assert!((ratio - 1.0).abs() < 0.05, "s={s}: {ratio}");
        }
    }

    #[test]
    fn monotone_and_convex_in_h() {
        let hs: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let fs: Vec<f64> = hs
            .iter()
            .map(|&h| {
                annealed_free_energy(&p(2, 2, h), 1e-14, DEFAULT_MAX_LEVELS)
                    .unwrap()
                    .value
            })
            .collect();
        for w in fs.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in fs.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
        }
    }

    #[test]
    fn singularity_fit_properties() {
        let params = p(2, 2, 0.0);
        let grid: Vec<f64> = (0..13).map(|i| 0.03 + 0.01 * i as f64).collect();
        let fit = fit_singularity(&params, &grid).unwrap();
        assert!(fit.slope > 0.0);
        let target = 2.0 * 2f64.ln();
        assert!(
            (fit.slope / target - 1.0).abs() < 0.15,
            "slope {}",
            fit.slope
        );
        // doubling the grid lowers -log F̂ pointwise
        for &e in &grid {
            let a = -free_energy_eps(&params, e).unwrap().log_value;
            let b = -free_energy_eps(&params, 2.0 * e).unwrap().log_value;
            assert!(b < a);
        }
    }

    #[test]
    fn singularity_fit_rejects_bad_points() {
        let params = p(2, 2, 0.0);
        assert!(matches!(
            fit_singularity(&params, &[0.1, -0.1]),
            Err(Error::Domain(_))
        ));
        // needs ~2/eps = 2e7 levels, beyond the level budget
        assert!(matches!(
            fit_singularity(&params, &[0.1, 1e-7]),
            Err(Error::Domain(_))
        ));
        assert!(fit_singularity(&p(2, 3, 0.0), &[0.1, 0.2]).is_err());
    }
}
