use crate::cs::{classify_case, CaseTag};
use crate::dpp::Frame;
use crate::error::{Error, Result};
use crate::exterior::IndexCombo;
use crate::linalg;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

const MAX_RETRIES: usize = 8;
const CASE_RETRIES: usize = 10;

/// Upper bounds on generated dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimLimits {
    pub n_max: usize,
    pub p_max: usize,
}

impl Default for DimLimits {
    fn default() -> Self {
        Self { n_max: 10, p_max: 6 }
    }
}

fn gaussian_rows<R: Rng + ?Sized>(rng: &mut R, p: usize, n: usize) -> Vec<Vec<f64>> {
    (0..p).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect()
}

/// Row-orthonormalises `rows`. Left multiplication keeps every linear
/// relation among the columns.
fn orthonormal_frame(rows: &[Vec<f64>]) -> Option<Frame> {
    let (basis, _) = linalg::gram_schmidt(rows, 1e-8);
    if basis.len() < rows.len() {
        return None;
    }
    Frame::new(basis).ok()
}

pub fn random_frame_with<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize) -> Result<Frame> {
    if p == 0 || p > n {
        return Err(Error::Config(format!("need 1 <= p <= N, got p = {p}, N = {n}")));
    }
    for _ in 0..MAX_RETRIES {
        if let Some(f) = orthonormal_frame(&gaussian_rows(rng, p, n)) {
            return Ok(f);
        }
    }
    Err(Error::RankDeficient(format!("{MAX_RETRIES} degenerate {p}x{n} draws in a row")))
}

/// Orthonormalised rows of a seeded standard Gaussian `p x n` matrix.
pub fn random_frame(seed: u64, n: usize, p: usize) -> Result<Frame> {
    if !(1 < p && p < n) {
        return Err(Error::Config(format!("need 1 < p < N, got p = {p}, N = {n}")));
    }
    random_frame_with(&mut ChaCha8Rng::seed_from_u64(seed), n, p)
}

/// Frame whose first `k` columns live in the first `k` coordinates with
/// `P(1..k ⊂ φ) = ∏ cos² θ_r`. Row `r <= k` is `[cos θ_r U_r, sin θ_r Q_r]`
/// and row `r > k` is `[0, Q_r]`, with `U` orthogonal `k x k` and `Q` a
/// `p x (n-k)` matrix with orthonormal rows.
pub fn canonical_n1_frame_with<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize, k: usize) -> Result<(Frame, Vec<f64>)> {
    if !(0 < k && k < p && p < n) || p > n - k {
        return Err(Error::Config(format!("infeasible canonical dims N = {n}, p = {p}, k = {k}")));
    }
    let thetas: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..FRAC_PI_2 - 0.05)).collect();
    let u = random_frame_with(rng, k, k)?;
    let q = random_frame_with(rng, n - k, p)?;
    let rows = (0..p)
        .map(|r| {
            let mut row = vec![0.0; n];
            let (c, s) = if r < k { (thetas[r].cos(), thetas[r].sin()) } else { (0.0, 1.0) };
            if r < k {
                for j in 0..k {
                    row[j] = c * u.rows()[r][j];
                }
            }
            for j in 0..n - k {
                row[k + j] = s * q.rows()[r][j];
            }
            row
        })
        .collect();
    Ok((Frame::from_rows_lenient(rows)?, thetas))
}

pub fn canonical_n1_frame(seed: u64, n: usize, p: usize, k: usize) -> Result<(Frame, Vec<f64>)> {
    canonical_n1_frame_with(&mut ChaCha8Rng::seed_from_u64(seed), n, p, k)
}

/// Two disjoint sets and two further points on a frame, drawn for a target
/// case tag.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseInstance {
    pub frame: Frame,
    pub a1: IndexCombo,
    pub a2: IndexCombo,
    pub x: usize,
    pub xp: usize,
    pub tag: CaseTag,
}

/// Relabels the ground set: old point `i` becomes `perm[i-1]`.
pub fn permute_labels(f: &Frame, perm: &[usize]) -> Result<Frame> {
    let rows = f
        .rows()
        .iter()
        .map(|row| {
            let mut out = vec![0.0; row.len()];
            for (i, v) in row.iter().enumerate() {
                out[perm[i] - 1] = *v;
            }
            out
        })
        .collect();
    Frame::new(rows)
}

fn pick<R: Rng + ?Sized, T: Copy>(rng: &mut R, items: &[T]) -> Result<T> {
    items.choose(rng).copied().ok_or_else(|| Error::Precondition("dimension limits leave no admissible shape".into()))
}

fn range<R: Rng + ?Sized>(rng: &mut R, lo: usize, hi: usize) -> Result<usize> {
    if lo > hi {
        return Err(Error::Precondition(format!("dimension limits leave no admissible shape ({lo} > {hi})")));
    }
    Ok(rng.random_range(lo..=hi))
}

/// `(p, k1, k2, n)` for a case.
fn shape<R: Rng + ?Sized>(rng: &mut R, tag: CaseTag, lim: DimLimits) -> Result<(usize, usize, usize, usize)> {
    let DimLimits { n_max, p_max } = lim;
    Ok(match tag {
        CaseTag::EqualFull => {
            let k = range(rng, 1, 3.min(p_max / 2).min(n_max.saturating_sub(2) / 2))?;
            (2 * k, k, k, range(rng, 2 * k + 2, n_max)?)
        }
        CaseTag::UnequalFull => {
            let opts: Vec<(usize, usize)> = [(1, 2), (1, 3), (1, 4), (2, 3), (1, 5), (2, 4)]
                .into_iter()
                .filter(|(a, b)| a + b <= p_max && a + b + 2 <= n_max)
                .collect();
            let (k1, k2) = pick(rng, &opts)?;
            (k1 + k2, k1, k2, range(rng, k1 + k2 + 2, n_max)?)
        }
        CaseTag::Restricted => {
            // with N = p + 1 only one point is missed and A1, A2 cannot both be
            let p = range(rng, 3, p_max.min(n_max.saturating_sub(2)))?;
            let chi = range(rng, 2, p - 1)?;
            let k1 = range(rng, 1, chi - 1)?;
            (p, k1, chi - k1, range(rng, p + 2, n_max)?)
        }
        CaseTag::Degenerate => {
            let p = range(rng, 2, p_max.min(5))?;
            let mut opts = Vec::new();
            for k1 in 1..p {
                for k2 in 1..p {
                    if k1 + k2 >= p && k1 + k2 + 2 <= n_max {
                        opts.push((k1, k2));
                    }
                }
            }
            let (k1, k2) = pick(rng, &opts)?;
            (p, k1, k2, range(rng, (p + 1).max(k1 + k2 + 2), n_max)?)
        }
        CaseTag::N1Fallback => {
            let p = range(rng, 2, p_max.min(4))?;
            let k1 = range(rng, 1, 2.min(p))?;
            (p, k1, p, range(rng, p + k1 + 2, n_max)?)
        }
    })
}

fn draw_case<R: Rng + ?Sized>(rng: &mut R, tag: CaseTag, lim: DimLimits) -> Result<CaseInstance> {
    let (p, k1, k2, n) = shape(rng, tag, lim)?;
    let chi = k1 + k2;
    let mut rows = gaussian_rows(rng, p, n);
    if tag == CaseTag::Degenerate && chi == p {
        // plant a dependency: the last A2 column joins the span of the others
        let coef: Vec<f64> = (0..chi - 1).map(|_| rng.sample(StandardNormal)).collect();
        for row in rows.iter_mut() {
            row[chi - 1] = (0..chi - 1).map(|j| coef[j] * row[j]).sum();
        }
    }
    let frame = orthonormal_frame(&rows).ok_or_else(|| Error::RankDeficient("degenerate draw".into()))?;
    let mut perm: Vec<usize> = (1..=n).collect();
    perm.shuffle(rng);
    let frame = permute_labels(&frame, &perm)?;
    let relabel = |lo: usize, hi: usize| IndexCombo::from_unsorted((lo..=hi).map(|i| perm[i - 1]).collect());
    Ok(CaseInstance {
        frame,
        a1: relabel(1, k1)?,
        a2: relabel(k1 + 1, chi)?,
        x: perm[chi],
        xp: perm[chi + 1],
        tag,
    })
}

/// Draws until the instance classifies as `tag`, with bounded retries.
pub fn generate_case<R: Rng + ?Sized>(rng: &mut R, tag: CaseTag, lim: DimLimits) -> Result<CaseInstance> {
    for _ in 0..CASE_RETRIES {
        let inst = draw_case(rng, tag, lim)?;
        if classify_case(&inst.frame, &inst.a1, &inst.a2).map(|c| c.tag == tag).unwrap_or(false) {
            return Ok(inst);
        }
    }
    Err(Error::Precondition(format!("no {tag} instance in {CASE_RETRIES} draws")))
}

/// `count` distinct points of `1..=n` outside `used`, in random order.
pub fn free_points<R: Rng + ?Sized>(rng: &mut R, n: usize, used: &[usize], count: usize) -> Result<Vec<usize>> {
    let mut pool: Vec<usize> = (1..=n).filter(|i| !used.contains(i)).collect();
    if pool.len() < count {
        return Err(Error::Precondition(format!("only {} free points, need {count}", pool.len())));
    }
    pool.shuffle(rng);
    pool.truncate(count);
    Ok(pool)
}

/// Angles uniform in `(0.01, π/2 - 0.01)`.
pub fn random_angles<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(0.01..FRAC_PI_2 - 0.01)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpp::{enumerate_distribution, inclusion_prob};

    #[test]
    fn same_seed_same_frame() {
        let a = random_frame(3, 8, 3).unwrap();
        let b = random_frame(3, 8, 3).unwrap();
        assert_eq!(a, b);
        assert!(random_frame(3, 3, 3).is_err());
    }

    #[test]
    fn distributions_sum_to_one() {
        for seed in 0..100 {
            let f = random_frame(seed, 8, 3).unwrap();
            assert!((enumerate_distribution(&f).unwrap().total() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn canonical_kappa_is_cos_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (f, th) = canonical_n1_frame_with(&mut rng, 9, 4, 2).unwrap();
        let kappa = inclusion_prob(&f, &IndexCombo::range(1, 2)).unwrap();
        let want: f64 = th.iter().map(|t| t.cos().powi(2)).product();
        assert!((kappa - want).abs() < 1e-12);
        assert!(canonical_n1_frame(1, 6, 4, 3).is_err());
    }

    #[test]
    fn every_case_tag_is_reachable() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for tag in CaseTag::ALL {
            for _ in 0..20 {
                let inst = generate_case(&mut rng, tag, DimLimits::default()).unwrap();
                assert_eq!(classify_case(&inst.frame, &inst.a1, &inst.a2).unwrap().tag, tag);
                assert!(inst.frame.n() <= 10);
            }
        }
    }
}
