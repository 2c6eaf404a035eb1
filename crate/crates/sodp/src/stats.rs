//! Binomial moments, Z-scores, Chebyshev bounds, the exact binomial CDF,
//! and the least-squares fits used by the experiments.
//!
//! The null model throughout: each sampled number's digit-sum parity is a
//! fair coin flip, so a trial's even count is Binomial(s, 1/2) and the mean
//! over t trials has E = s/2 and Var = s/(4t).
//!
//! The binomial CDF is anchored in log space by Loader's pmf exponent
//! (Stirling-error and deviance terms, as in R's `dbinom` — raw lgamma
//! differences would lose ~1e-6 of absolute precision to cancellation at
//! n ~ 1e8) and accumulated by the pmf recurrence toward the decaying tail.
//! The incomplete-beta continued fraction is kept for the Student-t tail,
//! where its arguments stay small; for binomial arguments near n/2 with
//! n ~ 1e9 the fraction plateaus around 5e-7 relative error, which is why
//! it is not used there.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("trial list is empty")]
    EmptyTrials,
    #[error("even count {count} exceeds sample size {sample_size}")]
    CountExceedsSampleSize { count: u64, sample_size: u64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("x values are degenerate (no variance)")]
    DegenerateX,
    #[error("x values must be positive and distinct for a fit in ln x")]
    BadLnDomain,
    #[error("normal equations are singular")]
    SingularSystem,
}

/// Normalized summary of one batch of parity-count trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub sample_size: u64,
    pub trials: u64,
    /// Mean of the per-trial even counts (X̄).
    pub avg_even: f64,
    /// s/2, the null expectation of X̄.
    pub expectation: f64,
    /// sqrt(s/(4t)), the null standard deviation of X̄.
    pub std_dev: f64,
    /// |avg_even − expectation| / std_dev.
    pub z_score: f64,
    /// Signed deviation in standard deviations; positive = skew toward Even.
    pub z_signed: f64,
    /// min(1, 1/z²), the Chebyshev bound on seeing this deviation under null.
    pub chebyshev_bound: f64,
}

/// Collapse per-trial even counts into a [`TrialSummary`].
pub fn summarize_trials(even_counts: &[u64], sample_size: u64) -> Result<TrialSummary, StatsError> {
    if even_counts.is_empty() {
        return Err(StatsError::EmptyTrials);
    }
    if let Some(&count) = even_counts.iter().find(|&&c| c > sample_size) {
        return Err(StatsError::CountExceedsSampleSize { count, sample_size });
    }
    let trials = even_counts.len() as u64;
    let total: u128 = even_counts.iter().map(|&c| u128::from(c)).sum();
    let avg_even = total as f64 / trials as f64;
    let expectation = sample_size as f64 / 2.0;
    let std_dev = (sample_size as f64 / (4.0 * trials as f64)).sqrt();
    let z_signed = (avg_even - expectation) / std_dev;
    let z_score = z_signed.abs();
    Ok(TrialSummary {
        sample_size,
        trials,
        avg_even,
        expectation,
        std_dev,
        z_score,
        z_signed,
        chebyshev_bound: chebyshev_bound(z_score),
    })
}

/// Chebyshev's bound min(1, 1/z²) on drawing data z standard deviations out.
pub fn chebyshev_bound(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    (1.0 / (z * z)).min(1.0)
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// ln Γ(z) for z > 0 (Lanczos, g = 7, 9 coefficients; ~1e-14 relative).
fn ln_gamma(z: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(z > 0.0);
    let z = z - 1.0;
    let mut x = 0.999_999_999_999_809_9;
    for (i, &c) in COEF.iter().enumerate() {
        x += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Stirling error: ln(x!) − ln(√(2πx)(x/e)^x). Series cutoffs follow Loader.
fn stirlerr(x: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if x < 16.0 {
        return ln_gamma(x + 1.0) - (x + 0.5) * x.ln() + x - 0.5 * (2.0 * PI).ln();
    }
    let nn = x * x;
    if x > 500.0 {
        (S0 - S1 / nn) / x
    } else if x > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / x
    } else if x > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / x
    }
}

/// Binomial deviance term x·ln(x/np) + np − x, evaluated by series when
/// x ≈ np to avoid cancellation.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        let mut j = 1u32;
        loop {
            ej *= v2;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
            j += 1;
        }
    } else {
        x * (x / np).ln() + np - x
    }
}

/// ln of the binomial pmf at integer k, 0 < k < n (Loader's algorithm).
fn ln_binom_pmf(k: u64, n: u64, p: f64, q: f64) -> f64 {
    if k == 0 {
        return n as f64 * q.ln();
    }
    if k == n {
        return n as f64 * p.ln();
    }
    let (kf, nf) = (k as f64, n as f64);
    let lc =
        stirlerr(nf) - stirlerr(kf) - stirlerr(nf - kf) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = 0.5 * (nf / (2.0 * PI * kf * (nf - kf))).ln();
    lc + lf
}

/// Lentz evaluation of the incomplete-beta continued fraction; multiply by
/// x^a (1−x)^b / (a B(a,b)) to get I_x(a,b). Valid for x below the cut
/// (a+1)/(a+b+2), where it converges; iteration headroom is generous because
/// convergence slows near the cut for very large a, b.
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 2_000_000;
    const EPS: f64 = 3.0e-16;
    const FPMIN: f64 = 1.0e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;
        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * betacf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * betacf(b, a, 1.0 - x) / b
    }
}

/// (cdf, sf) = (P[X ≤ k], P[X > k]) for X ~ Binomial(n, p), 0 ≤ k < n.
///
/// The side whose pmf terms decay away from k is summed directly (Kahan
/// compensated, seeded by the log-space pmf at the boundary), so a tiny tail
/// keeps full relative precision; the other side is its complement. Work is
/// O(√(npq)) terms in the worst (central) case.
fn binom_cdf_sf(k: u64, n: u64, p: f64) -> (f64, f64) {
    if p <= 0.0 {
        return (1.0, 0.0);
    }
    if p >= 1.0 {
        return (0.0, 1.0);
    }
    let q = 1.0 - p;
    let nf = n as f64;
    let mut acc = 0.0f64;
    let mut comp = 0.0f64; // Kahan carry
    let mut add = |term: f64, acc: &mut f64| {
        let y = term - comp;
        let t = *acc + y;
        comp = (t - *acc) - y;
        *acc = t;
    };
    if (k as f64) <= nf * p {
        // lower side: pmf(j−1) = pmf(j) · j·q / ((n−j+1)·p)
        let mut term = ln_binom_pmf(k, n, p, q).exp();
        let mut j = k;
        loop {
            add(term, &mut acc);
            if j == 0 || term < acc * 1e-18 {
                break;
            }
            term *= (j as f64 * q) / ((nf - j as f64 + 1.0) * p);
            j -= 1;
        }
        (acc.min(1.0), (1.0 - acc).max(0.0))
    } else {
        // upper side: pmf(j+1) = pmf(j) · (n−j)·p / ((j+1)·q)
        let mut term = ln_binom_pmf(k + 1, n, p, q).exp();
        let mut j = k + 1;
        loop {
            add(term, &mut acc);
            if j == n || term < acc * 1e-18 {
                break;
            }
            term *= ((nf - j as f64) * p) / ((j as f64 + 1.0) * q);
            j += 1;
        }
        ((1.0 - acc).max(0.0), acc.min(1.0))
    }
}

/// P[X ≤ k] for X ~ Binomial(n, p), exact to ~1e-10 absolute for n ≤ 1e9.
pub fn binomial_cdf(k: i64, n: u64, p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p must be a probability");
    assert!(n > 0, "n must be positive");
    if k < 0 {
        return 0.0;
    }
    if k as u64 >= n {
        return 1.0;
    }
    binom_cdf_sf(k as u64, n, p).0
}

/// P[X > k], the complement of [`binomial_cdf`], with full relative
/// precision in small upper tails.
pub fn binomial_sf(k: i64, n: u64, p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p must be a probability");
    assert!(n > 0, "n must be positive");
    if k < 0 {
        return 1.0;
    }
    if k as u64 >= n {
        return 0.0;
    }
    binom_cdf_sf(k as u64, n, p).1
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom:
/// P[|T| ≥ |t|] = I_{df/(df+t²)}(df/2, 1/2).
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    debug_assert!(df > 0.0);
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))
}

// ---------------------------------------------------------------------------
// Least-squares fits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    Linear,
    QuadraticInLnX,
}

impl FitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FitKind::Linear => "linear",
            FitKind::QuadraticInLnX => "quadratic_in_ln_x",
        }
    }
}

/// Least-squares fit. Coefficients are ordered [c2, c1, c0]:
/// linear fits fill (0, slope, intercept); quadratic-in-ln fits fill
/// (a, b, c) of a·t² + b·t + c with t = ln x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub kind: FitKind,
    pub coefficients: [f64; 3],
    /// Coefficient of determination; linear fits only.
    pub r_squared: Option<f64>,
    /// Two-sided p-value of the slope-is-zero t-test; linear fits only.
    pub p_value: Option<f64>,
    /// Sum of squared residuals.
    pub sse: f64,
}

impl FitResult {
    pub fn slope(&self) -> f64 {
        self.coefficients[1]
    }

    pub fn intercept(&self) -> f64 {
        self.coefficients[2]
    }

    pub fn predict(&self, x: f64) -> f64 {
        let [c2, c1, c0] = self.coefficients;
        match self.kind {
            FitKind::Linear => c1 * x + c0,
            FitKind::QuadraticInLnX => {
                let t = x.ln();
                c2 * t * t + c1 * t + c0
            }
        }
    }
}

/// Ordinary least squares y = m·x + b with r² and the two-sided p-value of
/// the slope (t-test, n − 2 degrees of freedom).
pub fn linear_fit(points: &[(f64, f64)]) -> Result<FitResult, StatsError> {
    if points.len() < 3 {
        return Err(StatsError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::DegenerateX);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if sse == 0.0 || syy == 0.0 {
        1.0
    } else {
        1.0 - sse / syy
    };
    let df = n - 2.0;
    let p_value = if sse == 0.0 {
        // exact fit: a nonzero slope is infinitely significant, a zero
        // slope carries no evidence at all
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let se = (sse / df / sxx).sqrt();
        student_t_two_sided_p(slope / se, df)
    };
    Ok(FitResult {
        kind: FitKind::Linear,
        coefficients: [0.0, slope, intercept],
        r_squared: Some(r_squared),
        p_value: Some(p_value),
        sse,
    })
}

/// Least squares over the basis {ln²x, ln x, 1}.
///
/// Solved on the centered variable u = ln x − mean(ln x) for conditioning,
/// then mapped back to raw-t coefficients.
pub fn quadratic_fit_lnx(points: &[(f64, f64)]) -> Result<FitResult, StatsError> {
    if points.len() < 4 {
        return Err(StatsError::TooFewPoints {
            needed: 4,
            got: points.len(),
        });
    }
    if points.iter().any(|&(x, _)| x <= 0.0) {
        return Err(StatsError::BadLnDomain);
    }
    let mut xs: Vec<f64> = points.iter().map(|&(x, _)| x).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(StatsError::BadLnDomain);
    }

    let n = points.len() as f64;
    let ts: Vec<f64> = points.iter().map(|&(x, _)| x.ln()).collect();
    let t_mean = ts.iter().sum::<f64>() / n;

    // normal equations in u = t − t̄ over basis {u², u, 1}
    let mut g = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&t, &(_, y)) in ts.iter().zip(points) {
        let u = t - t_mean;
        let row = [u * u, u, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * y;
        }
    }
    let [a, bu, cu] = solve3(g, rhs).ok_or(StatsError::SingularSystem)?;

    // a(t−T)² + bu(t−T) + cu = a·t² + (bu − 2aT)·t + (aT² − bu·T + cu)
    let b = bu - 2.0 * a * t_mean;
    let c = a * t_mean * t_mean - bu * t_mean + cu;

    let sse: f64 = ts
        .iter()
        .zip(points)
        .map(|(&t, &(_, y))| {
            let r = y - (a * t * t + b * t + c);
            r * r
        })
        .sum();
    Ok(FitResult {
        kind: FitKind::QuadraticInLnX,
        coefficients: [a, b, c],
        r_squared: None,
        p_value: None,
        sse,
    })
}

/// 3×3 linear solve, Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot =
            (col..3).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[pivot][col] == 0.0 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut out = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut s = v[row];
        for k in row + 1..3 {
            s -= m[row][k] * out[k];
        }
        out[row] = s / m[row][row];
    }
    Some(out)
}
