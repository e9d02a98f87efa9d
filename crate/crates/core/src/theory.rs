//! Limiting quantities for the co-rank of `r = 1, s = 3` matrices over GF(2)
//! and their GF(t) analogues.
//!
//! Everything is evaluated numerically in f64 with compensated summation;
//! series and products stop on explicit term-size bounds and report how many
//! terms they used.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Discrete, DiscreteCDF, Poisson};
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::error::{Error, Result};
use crate::model::{GftModel, ModelConfig, Replacement};

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

const MAX_SERIES_TERMS: usize = 100_000;

/// σ_s and κ_s, with exact counts where they fit in 128 bits.
///
/// `connected / total` is the fraction of mappings on `s` labelled vertices
/// (without fixed points in the without-replacement case) whose functional
/// digraph is connected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaKappa {
    pub sigma: f64,
    pub kappa: f64,
    pub connected: Option<u128>,
    pub total: Option<u128>,
}

pub fn sigma_kappa(s: u32, replacement: Replacement) -> Result<SigmaKappa> {
    let top = match replacement {
        Replacement::With if s >= 1 => s - 1,
        Replacement::Without if s >= 2 => s - 2,
        _ => {
            return Err(Error::OutOfRange(format!(
                "s = {s} is below the minimum for the {replacement}-replacement model"
            )))
        }
    };
    let sf = s as f64;
    let sigma: f64 = (0..=top)
        .map(|j| (j as f64 * sf.ln() - ln_factorial(j as u64)).exp())
        .collect::<CompensatedSum>()
        .value();
    let (base, ln_base) = match replacement {
        Replacement::With => (s as u128, sf.ln()),
        Replacement::Without => (s as u128 - 1, (sf - 1.0).ln()),
    };
    let kappa = if base == 1 {
        // s = 2 without replacement: one mapping, the 2-cycle
        sigma
    } else {
        (ln_factorial(s as u64 - 1) + sigma.ln() - sf * ln_base).exp()
    };
    let connected = (0..=top).try_fold(0u128, |acc, j| {
        let falling = ((j + 1)..s).try_fold(1u128, |p, x| p.checked_mul(x as u128))?;
        acc.checked_add(falling.checked_mul((s as u128).checked_pow(j)?)?)
    });
    let total = base.checked_pow(s);
    Ok(SigmaKappa {
        sigma,
        kappa,
        connected,
        total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
}

/// `(1/l) (2γ)^l e^{-l} Pr(Poisson(l) <= upper)`, the l-th term of the φ
/// series written with the inner sum as a Poisson CDF.
fn phi_term(l: usize, gamma: f64, upper: usize) -> f64 {
    let lf = l as f64;
    let cdf = Poisson::new(lf).expect("positive rate").cdf(upper as u64);
    (lf * (2.0 * gamma).ln() - lf - lf.ln()).exp() * cdf
}

fn phi_series(gamma: f64, without: bool, tol: f64, max_terms: Option<usize>) -> SeriesValue {
    let start = if without { 2 } else { 1 };
    let mut sum = CompensatedSum::new();
    let mut terms = 0;
    for l in start.. {
        let upper = if without { l - 2 } else { l - 1 };
        let term = phi_term(l, gamma, upper);
        sum.add(term);
        terms += 1;
        let done = match max_terms {
            Some(m) => terms >= m,
            None => term < tol * 1e-2 || terms >= MAX_SERIES_TERMS,
        };
        if done {
            break;
        }
    }
    SeriesValue {
        value: sum.value(),
        terms,
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::OutOfRange(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Poisson rate of small fundamental dependencies: φ_R with replacement,
/// φ_R̄ without.
pub fn phi(replacement: Replacement, tol: f64) -> Result<SeriesValue> {
    check_tol(tol)?;
    Ok(phi_series(1.0, replacement == Replacement::Without, tol, None))
}

/// The first `terms` terms of the φ series.
pub fn phi_partial(replacement: Replacement, terms: usize) -> f64 {
    if terms == 0 {
        return 0.0;
    }
    phi_series(1.0, replacement == Replacement::Without, 1.0, Some(terms)).value
}

/// φ_t for the GF(t) models: the without-replacement series with 2γ in
/// place of 2.
pub fn phi_t(gamma: f64, tol: f64) -> Result<SeriesValue> {
    check_tol(tol)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::OutOfRange(format!("γ must lie in (0, 1], got {gamma}")));
    }
    Ok(phi_series(gamma, true, tol, None))
}

const PRODUCT_CUTOFF: f64 = 1e-15;

/// ln π_q(k), where
/// π_q(k) = Π_{j>k}(1 - q^-j) / Π_{j<=k}(1 - q^-j) · q^{-k²}.
pub fn ln_pi_q(k: u32, q: f64) -> f64 {
    assert!(q > 1.0, "q must exceed 1");
    let mut tail = CompensatedSum::new();
    let mut j = k + 1;
    loop {
        let x = q.powi(-(j as i32));
        if x < PRODUCT_CUTOFF {
            break;
        }
        tail.add((-x).ln_1p());
        j += 1;
    }
    let head: f64 = (1..=k)
        .map(|j| (-q.powi(-(j as i32))).ln_1p())
        .collect::<CompensatedSum>()
        .value();
    tail.value() - head - (k as f64) * (k as f64) * q.ln()
}

pub fn pi_q(k: u32, q: f64) -> f64 {
    ln_pi_q(k, q).exp()
}

pub fn ln_pi_k(k: u32) -> f64 {
    ln_pi_q(k, 2.0)
}

/// π(k) over GF(2).
pub fn pi_k(k: u32) -> f64 {
    pi_q(k, 2.0)
}

/// Gaussian binomial coefficient `[m r]_q`, exactly.
///
/// Builds `[m-r+i, i]_q` for i = 1..r; each partial product is itself a
/// Gaussian coefficient and hence an integer, so the division is exact.
pub fn gaussian_binomial(m: u32, r: u32, q: u64) -> Result<u128> {
    if r > m {
        return Err(Error::OutOfRange(format!("r = {r} exceeds m = {m}")));
    }
    if q < 2 {
        return Err(Error::OutOfRange(format!("q must be at least 2, got {q}")));
    }
    let overflow = || Error::Overflow(format!("[{m} {r}]_{q}"));
    let q = q as u128;
    let mut acc: u128 = 1;
    for i in 1..=r {
        let num = q.checked_pow(m - r + i).ok_or_else(overflow)? - 1;
        let den = q.checked_pow(i).ok_or_else(overflow)? - 1;
        acc = acc.checked_mul(num).ok_or_else(overflow)? / den;
    }
    Ok(acc)
}

/// P*(h, h+r; m): probability that exactly `h` of `h+r` large dependencies
/// survive `m` small ones.
///
/// Evaluated as `2^{-h(m-r)} Π_{i=1}^r (1-2^{-(m-r+i)})/(1-2^{-i})
/// Π_{j=h+1}^{h+r} (1-2^{-j})`, which is the Gaussian-coefficient form with the
/// powers of two cancelled so nothing overflows.
pub fn p_star(h: u32, r: u32, m: u32) -> Result<f64> {
    if r > m {
        return Err(Error::OutOfRange(format!("P*: r = {r} exceeds m = {m}")));
    }
    let one_minus = |e: u32| 1.0 - 0.5f64.powi(e as i32);
    let mut v = 0.5f64.powi((h as i32) * ((m - r) as i32));
    for i in 1..=r {
        v *= one_minus(m - r + i) / one_minus(i);
    }
    for j in (h + 1)..=(h + r) {
        v *= one_minus(j);
    }
    Ok(v)
}

fn poisson_pmf(k: u32, rate: f64) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    Poisson::new(rate).expect("positive rate").pmf(k as u64)
}

/// Poisson(rate) masses at 0..=d_max.
pub fn poisson_law(rate: f64, d_max: u32) -> Vec<f64> {
    (0..=d_max).map(|k| poisson_pmf(k, rate)).collect()
}

/// P(σ, λ) = Poisson(σ; φ) Σ_{r=0}^σ π(λ+r) P*(λ, λ+r; σ).
pub fn p_joint(sigma: u32, lambda: u32, phi: f64) -> f64 {
    let inner: f64 = (0..=sigma)
        .map(|r| pi_k(lambda + r) * p_star(lambda, r, sigma).expect("r <= sigma"))
        .collect::<CompensatedSum>()
        .value();
    poisson_pmf(sigma, phi) * inner
}

/// Pr(corank = d) = Σ_{σ<=d} P(σ, d-σ), for d = 0..=d_max.
pub fn corank_distribution(d_max: u32, replacement: Replacement, tol: f64) -> Result<Vec<f64>> {
    let phi = phi(replacement, tol)?.value;
    Ok((0..=d_max).map(|d| corank_probability(d, phi)).collect())
}

fn corank_probability(d: u32, phi: f64) -> f64 {
    (0..=d)
        .map(|s| p_joint(s, d - s, phi))
        .collect::<CompensatedSum>()
        .value()
}

/// For each k <= k_max, Σ_{λ=k}^{k+60} π(λ) Π_{i<k}(2^λ - 2^i); returns the
/// largest deviation from 1.
pub fn verify_q_system(k_max: u32) -> Result<f64> {
    if k_max > 8 {
        return Err(Error::OutOfRange(format!("k_max = {k_max} exceeds 8")));
    }
    let ln2 = std::f64::consts::LN_2;
    let mut worst: f64 = 0.0;
    for k in 0..=k_max {
        let total: f64 = (k..=k + 60)
            .map(|l| {
                let ln_prod: f64 = (0..k)
                    .map(|i| l as f64 * ln2 + (-(0.5f64.powi((l - i) as i32))).ln_1p())
                    .sum();
                (ln_pi_k(l) + ln_prod).exp()
            })
            .collect::<CompensatedSum>()
            .value();
        worst = worst.max((total - 1.0).abs());
    }
    Ok(worst)
}

/// Column-level probabilities driving the first-moment count: a fixed
/// ℓ-set is a dependency iff each of its columns cancels (probability
/// `2γx(1-x) + αx²` at density `x = ℓ/n`) and each outside column avoids it
/// or hits it in a cancelling pair (`βx² + (1-x)²`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GftParams {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl GftParams {
    /// The GF(2) with-replacement model.
    pub const GF2_WITH: GftParams = GftParams {
        gamma: 1.0,
        alpha: 0.0,
        beta: 1.0,
    };

    pub fn for_model(model: GftModel, t: u32, f: Option<&[f64]>) -> Result<Self> {
        let t = t as usize;
        let unit;
        let f: &[f64] = match (model, f) {
            (GftModel::One, _) => {
                let mut d = vec![0.0; t];
                d[1 % t] = 1.0;
                unit = d;
                &unit
            }
            (_, Some(f)) if f.len() == t => f,
            (_, _) => {
                return Err(Error::InvalidConfig(format!(
                    "model {} needs an entry distribution over {t} residues",
                    model.number()
                )))
            }
        };
        let pair = |target: usize| -> f64 {
            (0..t)
                .map(|i| f[i] * f[(target + t - i) % t])
                .collect::<CompensatedSum>()
                .value()
        };
        let triple_zero: f64 = (0..t)
            .flat_map(|i| (0..t).map(move |j| (i, j)))
            .map(|(i, j)| f[i] * f[j] * f[(3 * t - i - j) % t])
            .collect::<CompensatedSum>()
            .value();
        let beta = pair(0);
        Ok(match model {
            GftModel::One | GftModel::Two => GftParams {
                gamma: f[t - 1],
                alpha: pair(t - 1),
                beta,
            },
            GftModel::Three => GftParams {
                gamma: beta,
                alpha: triple_zero,
                beta,
            },
        })
    }

    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        let model = cfg
            .gft_model
            .ok_or_else(|| Error::InvalidConfig("not a GF(t) configuration".into()))?;
        Self::for_model(model, cfg.field.order(), cfg.entry_distribution.as_deref())
    }

    /// Whether `α <= 2γ <= 1`.
    pub fn within_hypothesis(&self) -> bool {
        self.alpha <= 2.0 * self.gamma + 1e-15 && 2.0 * self.gamma <= 1.0 + 1e-15
    }
}

fn ln_expected(n: u64, l: u64, first: f64, second: f64) -> f64 {
    let mut v = ln_binomial(n, l);
    if l > 0 {
        if first <= 0.0 {
            return f64::NEG_INFINITY;
        }
        v += l as f64 * first.ln();
    }
    if n > l {
        if second <= 0.0 {
            return f64::NEG_INFINITY;
        }
        v += (n - l) as f64 * second.ln();
    }
    v
}

/// ln E X_ℓ for the GF(t) column law `params`.
pub fn ln_expected_num_deps_gft(n: u64, l: u64, params: &GftParams) -> Result<f64> {
    if l == 0 || l > n {
        return Err(Error::OutOfRange(format!("ℓ = {l} outside 1..={n}")));
    }
    let x = l as f64 / n as f64;
    let y = (n - l) as f64 / n as f64;
    let first = 2.0 * params.gamma * x * y + params.alpha * x * x;
    let second = params.beta * x * x + y * y;
    Ok(ln_expected(n, l, first, second))
}

pub fn expected_num_deps_gft(n: u64, l: u64, params: &GftParams) -> Result<f64> {
    Ok(ln_expected_num_deps_gft(n, l, params)?.exp())
}

/// ln E X_ℓ, the expected number of ℓ-row dependencies over GF(2), `r = 1, s = 3`.
pub fn ln_expected_num_deps(n: u64, l: u64, replacement: Replacement) -> Result<f64> {
    match replacement {
        Replacement::With => ln_expected_num_deps_gft(n, l, &GftParams::GF2_WITH),
        Replacement::Without => {
            if n < 3 {
                return Err(Error::OutOfRange(format!(
                    "without replacement needs n >= 3, got {n}"
                )));
            }
            if l == 0 || l > n {
                return Err(Error::OutOfRange(format!("ℓ = {l} outside 1..={n}")));
            }
            let (nf, lf) = (n as f64, l as f64);
            let den = (nf - 1.0) * (nf - 2.0);
            let first = 2.0 * (lf - 1.0) * (nf - lf) / den;
            let second = (lf * (lf - 1.0) + (nf - 1.0 - lf) * (nf - 2.0 - lf)) / den;
            Ok(ln_expected(n, l, first, second))
        }
    }
}

pub fn expected_num_deps(n: u64, l: u64, replacement: Replacement) -> Result<f64> {
    Ok(ln_expected_num_deps(n, l, replacement)?.exp())
}

/// Half-width √(a n ln n) of the large-dependency band around n/2.
pub fn large_band_halfwidth(n: usize, a: f64) -> f64 {
    let nf = n as f64;
    (a * nf * nf.ln()).sqrt()
}

/// Integer window J_a = {ℓ : |ℓ - n/2| <= √(a n ln n)} clipped to 1..=n.
pub fn window(n: usize, a: f64) -> (usize, usize) {
    let half = large_band_halfwidth(n, a);
    let centre = n as f64 / 2.0;
    let lo = (centre - half).ceil().max(1.0) as usize;
    let hi = ((centre + half).floor() as usize).min(n);
    (lo, hi)
}

/// Default small-dependency threshold ω = ⌈ln² n⌉.
pub fn default_omega(n: usize) -> usize {
    let l = (n as f64).ln();
    (l * l).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PStarEntry {
    pub h: u32,
    pub r: u32,
    pub m: u32,
    pub value: f64,
}

/// Limiting co-rank law for one model, plus its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryTable {
    pub model_tag: String,
    pub phi: f64,
    pub phi_terms: usize,
    /// π(k) for k = 0..=d_max (empty for the Poisson-only GF(t) tables).
    pub pi: Vec<f64>,
    pub p_star: Vec<PStarEntry>,
    /// `joint[σ][λ]` for σ, λ in 0..=d_max.
    pub joint: Vec<Vec<f64>>,
    /// Pr(corank = d) for d = 0..=d_max.
    pub corank: Vec<f64>,
    pub d_max: u32,
    pub tol: f64,
}

impl TheoryTable {
    /// GF(2), `r = 1`, `s = 3`.
    pub fn gf2(replacement: Replacement, d_max: u32, tol: f64) -> Result<Self> {
        let series = phi(replacement, tol)?;
        let phi = series.value;
        let pi = (0..=d_max).map(pi_k).collect();
        let mut p_star_table = Vec::new();
        for m in 0..=d_max {
            for r in 0..=m {
                for h in 0..=d_max {
                    p_star_table.push(PStarEntry {
                        h,
                        r,
                        m,
                        value: p_star(h, r, m)?,
                    });
                }
            }
        }
        let joint = (0..=d_max)
            .map(|s| (0..=d_max).map(|l| p_joint(s, l, phi)).collect())
            .collect();
        let corank = (0..=d_max).map(|d| corank_probability(d, phi)).collect();
        Ok(TheoryTable {
            model_tag: format!("gf2/r1/s3/{replacement}"),
            phi,
            phi_terms: series.terms,
            pi,
            p_star: p_star_table,
            joint,
            corank,
            d_max,
            tol,
        })
    }

    /// GF(t) models: Poisson(φ_t) co-rank for models 2 and 3 (all of it
    /// small, so the joint law sits on λ = 0), and a point mass for model 1.
    pub fn gft(cfg: &ModelConfig, d_max: u32, tol: f64) -> Result<Self> {
        cfg.validate()?;
        let model = cfg
            .gft_model
            .ok_or_else(|| Error::InvalidConfig("not a GF(t) configuration".into()))?;
        let t = cfg.field.order();
        if t < 3 {
            return Err(Error::OutsideHypothesis(format!(
                "the GF(t) law is stated for t >= 3, got t = {t}"
            )));
        }
        let size = d_max as usize + 1;
        let mut joint = vec![vec![0.0; size]; size];
        let (phi, phi_terms, corank) = match model {
            GftModel::One => {
                let d = usize::from(t == 3);
                let mut c = vec![0.0; size];
                if d < size {
                    c[d] = 1.0;
                }
                (0.0, 0, c)
            }
            _ => {
                let params = GftParams::from_config(cfg)?;
                if !params.within_hypothesis() {
                    return Err(Error::OutsideHypothesis(format!(
                        "need α <= 2γ <= 1, got α = {}, γ = {}",
                        params.alpha, params.gamma
                    )));
                }
                let series = if params.gamma == 0.0 {
                    SeriesValue { value: 0.0, terms: 0 }
                } else {
                    phi_t(params.gamma, tol)?
                };
                let c = (0..=d_max).map(|d| poisson_pmf(d, series.value)).collect();
                (series.value, series.terms, c)
            }
        };
        for (d, &p) in corank.iter().enumerate() {
            joint[d][0] = p;
        }
        if model == GftModel::One {
            // the GF(3) all-ones dependency is large
            for row in joint.iter_mut() {
                row.iter_mut().for_each(|v| *v = 0.0);
            }
            for (d, &p) in corank.iter().enumerate() {
                joint[0][d] = p;
            }
        }
        Ok(TheoryTable {
            model_tag: cfg.tag(),
            phi,
            phi_terms,
            pi: Vec::new(),
            p_star: Vec::new(),
            joint,
            corank,
            d_max,
            tol,
        })
    }

    /// The table matching a campaign configuration, if the theory covers it.
    pub fn for_config(cfg: &ModelConfig, d_max: u32, tol: f64) -> Result<Self> {
        if cfg.is_gft() {
            return Self::gft(cfg, d_max, tol);
        }
        if cfg.r != 1 || cfg.s != 3 {
            return Err(Error::OutsideHypothesis(format!(
                "the co-rank law is tabulated for r = 1, s = 3 (got r = {}, s = {})",
                cfg.r, cfg.s
            )));
        }
        Self::gf2(cfg.replacement, d_max, tol)
    }

    pub fn full_rank_probability(&self) -> f64 {
        self.corank[0]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn corank_csv(&self) -> String {
        let mut out = String::from("d,probability\n");
        for (d, p) in self.corank.iter().enumerate() {
            out.push_str(&format!("{d},{p:.12e}\n"));
        }
        out
    }

    pub fn joint_csv(&self) -> String {
        let mut out = String::from("sigma,lambda,probability\n");
        for (s, row) in self.joint.iter().enumerate() {
            for (l, p) in row.iter().enumerate() {
                out.push_str(&format!("{s},{l},{p:.12e}\n"));
            }
        }
        out
    }
}
