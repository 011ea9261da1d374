//! Reproducible driving paths: Brownian increments, truncated-Fourier Lévy
//! areas, fractional Brownian motion, and the pure-area driver.
//!
//! # Stream derivation
//!
//! Every random draw comes from a ChaCha8 stream keyed by
//! [`substream_seed`]`(seed, purpose, a, b)`, a SplitMix64-style avalanche of
//! the words onto the base seed. Purpose tags:
//!
//! | purpose | stream                      | a       | b       |
//! |---------|-----------------------------|---------|---------|
//! | 0       | per-step increment draw     | step    | channel |
//! | 1       | per-step Lévy-area stream   | step    | 0       |
//! | 2       | whole-path fBM component    | channel | 0       |
//! | 3       | ensemble member path seed   | member  | 0       |
//! | 4       | fast-OU transition draws    | 0       | 0       |
//! | 5       | bootstrap resampling        | 0       | 0       |
//!
//! Each (step, channel) cell therefore regenerates identically regardless of
//! execution order or parallelism, and a path of S steps is a prefix of the
//! same-seed path of S′ > S steps.
//!
//! # Lévy areas
//!
//! Per step the bridge Fourier coefficients are drawn r-major
//! (a_{0,r}, b_{0,r}, a_{1,r}, b_{1,r}, … for r = 1, 2, …) with
//! a_{j,r}, b_{j,r} ~ N(0, Δt/(2π²r²)), the bridge-at-zero constraint sets
//! a_{j,0} = −2Σ_{r≤K} a_{j,r}, and
//!
//! ```text
//! A_{j₁j₂} = ½(a_{j₁,0}ΔW^{j₂} − a_{j₂,0}ΔW^{j₁})
//!          + π Σ_{r=1}^K r (a_{j₁,r} b_{j₂,r} − b_{j₁,r} a_{j₂,r}) .
//! ```
//!
//! The r-major order makes a depth-K estimate a prefix of a deeper one, which
//! is what the truncation tests measure. The tests validate the sampler's law
//! (mean, variance Δt²/4, independence from the symmetric increment product)
//! against a fine-mesh iterated-sum oracle before any integrator consumes it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Default truncation depth of the Lévy-area Fourier series (chosen ≳ 1/Δt
/// for the benchmark step Δt = 1/250).
pub const DEFAULT_LEVY_TERMS: usize = 10_000;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Documented sub-seeding hash: absorb (purpose, a, b) into `seed` one word at
/// a time through a full-avalanche mix. See the module docs for the purpose
/// table.
pub fn substream_seed(seed: u64, purpose: u64, a: u64, b: u64) -> u64 {
    let mut z = seed;
    for w in [purpose, a, b] {
        z = mix64(z.wrapping_add(GOLDEN).wrapping_add(w));
    }
    z
}

/// Path seed of ensemble member `member` under experiment seed `seed`.
pub fn member_seed(seed: u64, member: u64) -> u64 {
    substream_seed(seed, 3, member, 0)
}

fn stream_rng(seed: u64, purpose: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, purpose, a, b))
}

/// Per-step Lévy-area stream for a path.
pub fn area_rng(path_seed: u64, step: usize) -> ChaCha8Rng {
    stream_rng(path_seed, 1, step as u64, 0)
}

/// Exactly antisymmetric m×m matrix stored by its strict upper triangle in
/// lexicographic pair order (0,1), (0,2), …, (1,2), …; antisymmetry holds by
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct AntisymMat {
    m: usize,
    upper: Vec<f64>,
}

impl AntisymMat {
    pub fn zeros(m: usize) -> Self {
        AntisymMat {
            m,
            upper: vec![0.0; m * (m - 1) / 2],
        }
    }

    /// Build from strict-upper-triangle entries in pair order.
    pub fn from_upper(m: usize, upper: Vec<f64>) -> Self {
        assert_eq!(upper.len(), m * (m - 1) / 2);
        AntisymMat { m, upper }
    }

    /// Build from a dense 2×2 antisymmetric matrix.
    pub fn from_2x2(s: [[f64; 2]; 2]) -> Result<Self> {
        if s[0][0] != 0.0 || s[1][1] != 0.0 || s[0][1] != -s[1][0] {
            return Err(Error::NotAntisymmetric {
                context: format!("{s:?}"),
            });
        }
        Ok(AntisymMat::from_upper(2, vec![s[0][1]]))
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.m);
        i * (2 * self.m - i - 1) / 2 + (j - i - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => 0.0,
            Less => self.upper[self.upper_index(i, j)],
            Greater => -self.upper[self.upper_index(j, i)],
        }
    }

    /// Set the (i, j), i < j entry (and implicitly its negative transpose).
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.upper_index(i, j);
        self.upper[idx] = v;
    }

    pub fn scaled(&self, c: f64) -> Self {
        AntisymMat {
            m: self.m,
            upper: self.upper.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &AntisymMat) {
        debug_assert_eq!(self.m, other.m);
        for (a, b) in self.upper.iter_mut().zip(&other.upper) {
            *a += b;
        }
    }

    pub fn upper_entries(&self) -> &[f64] {
        &self.upper
    }
}

/// A realized driving path: per-step increments, optional per-step Lévy
/// areas, and the seed that regenerates it. Immutable after construction in
/// normal use; freely shareable across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivingPath {
    pub dt: f64,
    /// increments[step][channel]
    pub increments: Vec<Vec<f64>>,
    pub areas: Option<Vec<AntisymMat>>,
    pub seed: u64,
    pub hurst: Option<f64>,
}

impl DrivingPath {
    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    pub fn m(&self) -> usize {
        self.increments.first().map_or(0, |row| row.len())
    }

    /// Running sum of one channel: W at step boundaries, length steps + 1,
    /// starting at 0.
    pub fn cumulative(&self, channel: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.steps() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for row in &self.increments {
            acc += row[channel];
            out.push(acc);
        }
        out
    }

    /// Sample and store per-step Lévy areas at truncation depth `k_terms`,
    /// using the path's own per-step area streams.
    pub fn attach_levy_areas(&mut self, k_terms: usize) {
        let areas = (0..self.steps())
            .map(|s| {
                let mut rng = area_rng(self.seed, s);
                levy_area(&mut rng, &self.increments[s], self.dt, k_terms)
            })
            .collect();
        self.areas = Some(areas);
    }

    /// Dump as CSV: a `# dt=… seed=…[ hurst=…]` metadata line, a header, then
    /// one row per step. Floats print in shortest round-trip form, so
    /// write → read is bit-identical.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        write!(w, "# dt={} seed={}", self.dt, self.seed)?;
        if let Some(h) = self.hurst {
            write!(w, " hurst={h}")?;
        }
        writeln!(w)?;
        let m = self.m();
        let mut header = String::from("step");
        for c in 0..m {
            header.push_str(&format!(",dW{}", c + 1));
        }
        if self.areas.is_some() {
            for i in 0..m {
                for j in (i + 1)..m {
                    header.push_str(&format!(",A{}{}", i + 1, j + 1));
                }
            }
        }
        writeln!(w, "{header}")?;
        for (s, row) in self.increments.iter().enumerate() {
            write!(w, "{s}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            if let Some(areas) = &self.areas {
                for v in areas[s].upper_entries() {
                    write!(w, ",{v}")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Load a path dumped by [`DrivingPath::write_csv`].
    pub fn read_csv<R: std::io::BufRead>(r: R) -> Result<Self> {
        let mut dt = None;
        let mut seed = None;
        let mut hurst = None;
        let mut m = 0usize;
        let mut has_areas = false;
        let mut increments: Vec<Vec<f64>> = Vec::new();
        let mut areas: Vec<AntisymMat> = Vec::new();

        let parse_err = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };

        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if let Some(meta) = text.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    let (key, value) = kv
                        .split_once('=')
                        .ok_or_else(|| parse_err(lineno, "metadata must be key=value"))?;
                    let v: f64 = value
                        .parse()
                        .map_err(|_| parse_err(lineno, "bad metadata number"))?;
                    match key {
                        "dt" => dt = Some(v),
                        "seed" => seed = Some(value.parse::<u64>().map_err(|_| {
                            parse_err(lineno, "seed must be an unsigned integer")
                        })?),
                        "hurst" => hurst = Some(v),
                        _ => return Err(parse_err(lineno, "unknown metadata key")),
                    }
                }
                continue;
            }
            if text.starts_with("step") {
                let cols: Vec<&str> = text.split(',').collect();
                m = cols.iter().filter(|c| c.starts_with("dW")).count();
                has_areas = cols.iter().any(|c| c.starts_with('A'));
                if m == 0 {
                    return Err(parse_err(lineno, "header has no dW columns"));
                }
                continue;
            }
            if m == 0 {
                return Err(parse_err(lineno, "data before header"));
            }
            let fields: Vec<&str> = text.split(',').collect();
            let expected = 1 + m + if has_areas { m * (m - 1) / 2 } else { 0 };
            if fields.len() != expected {
                return Err(parse_err(lineno, "wrong number of columns"));
            }
            let mut nums = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| parse_err(lineno, "bad float")));
            let mut row = Vec::with_capacity(m);
            for _ in 0..m {
                row.push(nums.next().unwrap()?);
            }
            increments.push(row);
            if has_areas {
                let mut upper = Vec::with_capacity(m * (m - 1) / 2);
                for v in nums {
                    upper.push(v?);
                }
                areas.push(AntisymMat::from_upper(m, upper));
            }
        }

        Ok(DrivingPath {
            dt: dt.ok_or_else(|| parse_err(0, "missing dt metadata"))?,
            seed: seed.ok_or_else(|| parse_err(0, "missing seed metadata"))?,
            increments,
            areas: if has_areas { Some(areas) } else { None },
            hurst,
        })
    }
}

/// Brownian increments: ΔW[step][channel] ~ N(0, Δt) i.i.d., one keyed stream
/// per (step, channel) cell.
pub fn brownian(seed: u64, steps: usize, m: usize, dt: f64) -> DrivingPath {
    let sqrt_dt = dt.sqrt();
    let increments = (0..steps)
        .map(|s| {
            (0..m)
                .map(|c| {
                    let z: f64 = stream_rng(seed, 0, s as u64, c as u64).sample(StandardNormal);
                    z * sqrt_dt
                })
                .collect()
        })
        .collect();
    DrivingPath {
        dt,
        increments,
        areas: None,
        seed,
        hurst: None,
    }
}

/// The zero driving path: every increment vanishes. Noise-free dynamics are
/// driven by this path so that frame diagnostics and pathwise identities see
/// W² ≡ 0 rather than an unused Brownian realization.
pub fn zero_path(steps: usize, m: usize, dt: f64) -> DrivingPath {
    DrivingPath {
        dt,
        increments: vec![vec![0.0; m]; steps],
        areas: None,
        seed: 0,
        hurst: None,
    }
}

/// One truncation depth of the Lévy-area estimator: the full estimate and its
/// oscillatory (Fourier-sum) part. The chord part is the difference.
#[derive(Clone, Debug)]
pub struct LevyDepthSample {
    pub k_terms: usize,
    pub estimate: AntisymMat,
    pub fourier_part: AntisymMat,
}

/// Evaluate the Lévy-area estimator at several truncation depths from one
/// coefficient stream (r-major draws, so depth K is a strict prefix of a
/// deeper evaluation). `depths` must be strictly increasing.
pub fn levy_area_partial(
    rng: &mut impl Rng,
    dw: &[f64],
    dt: f64,
    depths: &[usize],
) -> Vec<LevyDepthSample> {
    let m = dw.len();
    debug_assert!(depths.windows(2).all(|w| w[0] < w[1]));
    let max_k = *depths.last().expect("at least one depth");

    // Running coefficient sums Σ_r a_{j,r} and the Fourier accumulator per pair.
    let mut coeff_sum = vec![0.0; m];
    let mut fourier = AntisymMat::zeros(m);
    let mut out = Vec::with_capacity(depths.len());
    let mut next_depth = 0;

    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    for r in 1..=max_k {
        let sigma = (dt / (2.0 * std::f64::consts::PI.powi(2) * (r * r) as f64)).sqrt();
        for j in 0..m {
            let za: f64 = rng.sample(StandardNormal);
            let zb: f64 = rng.sample(StandardNormal);
            a[j] = za * sigma;
            b[j] = zb * sigma;
            coeff_sum[j] += a[j];
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let update = std::f64::consts::PI * r as f64 * (a[i] * b[j] - b[i] * a[j]);
                fourier.set(i, j, fourier.get(i, j) + update);
            }
        }
        if next_depth < depths.len() && r == depths[next_depth] {
            let mut estimate = fourier.clone();
            for i in 0..m {
                for j in (i + 1)..m {
                    // ½(a_{i,0}ΔW^j − a_{j,0}ΔW^i) with a_{·,0} = −2Σ_r a_{·,r}.
                    let chord = -coeff_sum[i] * dw[j] + coeff_sum[j] * dw[i];
                    estimate.set(i, j, estimate.get(i, j) + chord);
                }
            }
            out.push(LevyDepthSample {
                k_terms: r,
                estimate,
                fourier_part: fourier.clone(),
            });
            next_depth += 1;
        }
    }
    out
}

/// Sample one step's Lévy-area matrix at truncation depth `k_terms`.
pub fn levy_area(rng: &mut impl Rng, dw: &[f64], dt: f64, k_terms: usize) -> AntisymMat {
    levy_area_partial(rng, dw, dt, &[k_terms])
        .pop()
        .unwrap()
        .estimate
}

/// Fractional Brownian increments by Davies–Harte circulant embedding.
/// Increment s of channel c is dt^H × (fGN with autocovariance
/// γ(k) = ½(|k+1|^{2H} + |k−1|^{2H} − 2|k|^{2H})); channels independent.
pub fn fbm(seed: u64, steps: usize, m: usize, dt: f64, hurst: f64) -> Result<DrivingPath> {
    if !(hurst > 1.0 / 3.0 && hurst < 1.0) {
        return Err(Error::BadHurst { hurst });
    }

    let g = steps.next_power_of_two().max(2);
    let big = 2 * g;
    let two_h = 2.0 * hurst;
    let gamma = |k: usize| {
        let k = k as f64;
        0.5 * ((k + 1.0).powf(two_h) + (k - 1.0).abs().powf(two_h) - 2.0 * k.powf(two_h))
    };

    // First row of the circulant embedding and its eigenvalues.
    use rustfft::num_complex::Complex64;
    let mut c: Vec<Complex64> = (0..big)
        .map(|j| {
            let lag = if j <= g { j } else { big - j };
            Complex64::new(gamma(lag), 0.0)
        })
        .collect();
    let mut planner = rustfft::FftPlanner::new();
    let fft = planner.plan_fft_forward(big);
    fft.process(&mut c);

    let max_eig = c.iter().map(|e| e.re).fold(0.0_f64, f64::max);
    let mut eigs = Vec::with_capacity(big);
    for e in &c {
        // Round-off repair only: true negatives are reported, never clamped.
        if e.re < -1e-12 * max_eig {
            return Err(Error::NonPsdEmbedding {
                hurst,
                min_eig: e.re,
            });
        }
        eigs.push(e.re.max(0.0));
    }

    let scale = dt.powf(hurst);
    let mut increments = vec![vec![0.0; m]; steps];
    for channel in 0..m {
        let mut rng = stream_rng(seed, 2, channel as u64, 0);
        let mut w = vec![Complex64::new(0.0, 0.0); big];
        let z0: f64 = rng.sample(StandardNormal);
        w[0] = Complex64::new((eigs[0] / big as f64).sqrt() * z0, 0.0);
        let zg: f64 = rng.sample(StandardNormal);
        w[g] = Complex64::new((eigs[g] / big as f64).sqrt() * zg, 0.0);
        for j in 1..g {
            let amp = (eigs[j] / (2.0 * big as f64)).sqrt();
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            w[j] = Complex64::new(amp * z1, amp * z2);
            w[big - j] = w[j].conj();
        }
        fft.process(&mut w);
        for s in 0..steps {
            increments[s][channel] = w[s].re * scale;
        }
    }

    Ok(DrivingPath {
        dt,
        increments,
        areas: None,
        seed,
        hurst: Some(hurst),
    })
}

/// The pure-area driver: zero path increments, per-step areas s·Δt.
pub fn pure_area(steps: usize, dt: f64, s: [[f64; 2]; 2]) -> Result<DrivingPath> {
    let per_step = AntisymMat::from_2x2(s)?.scaled(dt);
    Ok(DrivingPath {
        dt,
        increments: vec![vec![0.0; 2]; steps],
        areas: Some(vec![per_step; steps]),
        seed: 0,
        hurst: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const DT: f64 = 1.0 / 250.0;

    fn mean_and_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
        let (mx, vx) = mean_and_var(xs);
        let (my, vy) = mean_and_var(ys);
        let n = xs.len() as f64;
        let cov = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / (n - 1.0);
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn substream_seed_separates_words() {
        // Different coordinates give different streams; same coordinates agree.
        let base = substream_seed(42, 0, 7, 1);
        assert_eq!(base, substream_seed(42, 0, 7, 1));
        assert_ne!(base, substream_seed(42, 0, 7, 2));
        assert_ne!(base, substream_seed(42, 0, 8, 1));
        assert_ne!(base, substream_seed(42, 1, 7, 1));
        assert_ne!(base, substream_seed(43, 0, 7, 1));
        // Word boundaries matter: (a, b) = (1, 0) differs from (0, 1).
        assert_ne!(substream_seed(42, 0, 1, 0), substream_seed(42, 0, 0, 1));
    }

    #[test]
    fn brownian_bit_identical_and_prefix_stable() {
        let p1 = brownian(42, 9, 2, DT);
        let p2 = brownian(42, 9, 2, DT);
        assert_eq!(p1, p2);

        let longer = brownian(42, 20, 2, DT);
        assert_eq!(&longer.increments[..9], &p1.increments[..]);

        let other = brownian(43, 9, 2, DT);
        assert_ne!(p1.increments, other.increments);
    }

    #[test]
    fn brownian_law() {
        // 5·10⁵ steps × 2 channels = 10⁶ draws.
        let p = brownian(0xb10, 500_000, 2, DT);
        for c in 0..2 {
            let xs: Vec<f64> = p.increments.iter().map(|row| row[c]).collect();
            let (mean, var) = mean_and_var(&xs);
            let se = (DT / xs.len() as f64).sqrt();
            assert!(mean.abs() <= 4.0 * se, "mean {mean} exceeds 4·SE {se}");
            assert!((var - DT).abs() <= 0.01 * DT, "variance {var} vs dt {DT}");
            // Disjoint steps are independent: lag-1 correlation is MC noise.
            let corr = correlation(&xs[..xs.len() - 1], &xs[1..]);
            assert!(corr.abs() <= 4.0 / (xs.len() as f64).sqrt());
        }
        let c0: Vec<f64> = p.increments.iter().map(|row| row[0]).collect();
        let c1: Vec<f64> = p.increments.iter().map(|row| row[1]).collect();
        assert!(correlation(&c0, &c1).abs() <= 4.0 / (c0.len() as f64).sqrt());
    }

    #[test]
    fn antisym_matrix_is_exactly_antisymmetric() {
        let mut a = AntisymMat::zeros(4);
        let mut v = 1.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                a.set(i, j, v);
                v += 1.0;
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.get(i, j), -a.get(j, i));
            }
        }
        assert_eq!(a.get(2, 2), 0.0);
        assert_eq!(a.upper_entries().len(), 6);
    }

    #[test]
    fn levy_area_law() {
        // Mean, variance, and decorrelation from the symmetric product, at the
        // depth the variance result needs (K ≥ 500).
        let k = 500;
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(0x1e17);
        let sqrt_dt = DT.sqrt();
        let mut samples = Vec::with_capacity(n);
        let mut sym = Vec::with_capacity(n);
        for _ in 0..n {
            let dw = [
                rng.sample::<f64, _>(StandardNormal) * sqrt_dt,
                rng.sample::<f64, _>(StandardNormal) * sqrt_dt,
            ];
            let a = levy_area(&mut rng, &dw, DT, k);
            samples.push(a.get(0, 1));
            sym.push(dw[0] * dw[1]);
        }
        let (mean, var) = mean_and_var(&samples);
        let se = (var / n as f64).sqrt();
        assert!(mean.abs() <= 4.0 * se, "mean {mean} vs 4·SE {se}");
        let target = DT * DT / 4.0;
        assert!(
            (var - target).abs() <= 0.03 * target,
            "variance {var} vs dt²/4 = {target}"
        );
        assert!(
            correlation(&samples, &sym).abs() <= 0.02,
            "area correlates with symmetric part"
        );
    }

    #[test]
    fn levy_area_truncation_tail() {
        // One shared coefficient stream, depths K and 4K. The classical MSE
        // bound Δt²/(2π²K) governs the Fourier-series tail; the chord
        // coefficient a₀ = −2Σ_{r≤K} a_r adds exactly twice that tail again,
        // so the full-estimator difference obeys (3/2)(Δt²/π²)Σ_{K<r≤4K}r⁻².
        let k = 500;
        let n = 30_000;
        let mut rng = ChaCha8Rng::seed_from_u64(0x7a11);
        let sqrt_dt = DT.sqrt();
        let mut full_sq = 0.0;
        let mut fourier_sq = 0.0;
        for _ in 0..n {
            let dw = [
                rng.sample::<f64, _>(StandardNormal) * sqrt_dt,
                rng.sample::<f64, _>(StandardNormal) * sqrt_dt,
            ];
            let evals = levy_area_partial(&mut rng, &dw, DT, &[k, 4 * k]);
            let d_full = evals[1].estimate.get(0, 1) - evals[0].estimate.get(0, 1);
            let d_fourier = evals[1].fourier_part.get(0, 1) - evals[0].fourier_part.get(0, 1);
            full_sq += d_full * d_full;
            fourier_sq += d_fourier * d_fourier;
        }
        full_sq /= n as f64;
        fourier_sq /= n as f64;

        let bound = DT * DT / (2.0 * std::f64::consts::PI.powi(2) * k as f64);
        assert!(
            fourier_sq <= bound,
            "fourier tail {fourier_sq} exceeds bound {bound}"
        );
        let tail: f64 = ((k + 1)..=(4 * k)).map(|r| 1.0 / (r * r) as f64).sum();
        let full_pred = 1.5 * DT * DT / std::f64::consts::PI.powi(2) * tail;
        assert!(
            (full_sq - full_pred).abs() <= 0.1 * full_pred,
            "full-estimator tail {full_sq} vs predicted {full_pred}"
        );
    }

    #[test]
    fn levy_area_depth_is_prefix_of_deeper_run() {
        let dw = [0.01, -0.02];
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let single = levy_area(&mut r1, &dw, DT, 100);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let multi = levy_area_partial(&mut r2, &dw, DT, &[100, 300]);
        assert_eq!(single, multi[0].estimate);
    }

    #[test]
    fn chen_additivity_of_step_areas() {
        // Areas over disjoint steps are independent zero-mean: the whole-path
        // sum has mean 0 and variance steps·dt²/4.
        let steps = 30;
        let paths = 2_000;
        let k = 300;
        let mut totals = Vec::with_capacity(paths);
        for member in 0..paths {
            let mut path = brownian(member_seed(0xc4e4, member as u64), steps, 2, DT);
            path.attach_levy_areas(k);
            let total: f64 = path
                .areas
                .as_ref()
                .unwrap()
                .iter()
                .map(|a| a.get(0, 1))
                .sum();
            totals.push(total);
        }
        let (mean, var) = mean_and_var(&totals);
        let target = steps as f64 * DT * DT / 4.0;
        let se_mean = (target / paths as f64).sqrt();
        assert!(mean.abs() <= 4.0 * se_mean);
        let se_var_rel = (2.0 / paths as f64).sqrt();
        assert!(
            (var - target).abs() <= 4.0 * se_var_rel * target,
            "variance {var} vs {target}"
        );
    }

    #[test]
    fn attach_levy_areas_is_deterministic() {
        let mut p1 = brownian(5, 12, 2, DT);
        p1.attach_levy_areas(64);
        let mut p2 = brownian(5, 12, 2, DT);
        p2.attach_levy_areas(64);
        assert_eq!(p1, p2);
    }

    #[test]
    fn fbm_rejects_bad_hurst() {
        assert!(matches!(fbm(1, 8, 1, DT, 0.2), Err(Error::BadHurst { .. })));
        assert!(matches!(fbm(1, 8, 1, DT, 1.0), Err(Error::BadHurst { .. })));
    }

    #[test]
    fn fbm_reproducible() {
        let a = fbm(77, 100, 2, DT, 0.4).unwrap();
        let b = fbm(77, 100, 2, DT, 0.4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hurst, Some(0.4));
    }

    #[test]
    fn fbm_half_is_brownian() {
        // H = 1/2: increments are i.i.d. N(0, dt).
        let p = fbm(0xfb, 1 << 19, 2, DT, 0.5).unwrap();
        let xs: Vec<f64> = p.increments.iter().map(|row| row[0]).collect();
        let (mean, var) = mean_and_var(&xs);
        assert!(mean.abs() <= 4.0 * (DT / xs.len() as f64).sqrt());
        assert!((var - DT).abs() <= 0.01 * DT);
        let corr = correlation(&xs[..xs.len() - 1], &xs[1..]);
        assert!(corr.abs() <= 4.0 / (xs.len() as f64).sqrt());
    }

    #[test]
    fn fbm_lag_one_correlation() {
        // γ(1)/γ(0) = 2^{2H−1} − 1 ≈ −0.1295 at H = 0.4; 16 paths × 2¹⁶ steps
        // give 10⁶ increments.
        let h = 0.4;
        let expected = 2.0_f64.powf(2.0 * h - 1.0) - 1.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for path_id in 0..16 {
            let p = fbm(member_seed(0xf1a6, path_id), 1 << 16, 1, DT, h).unwrap();
            let xs: Vec<f64> = p.increments.iter().map(|row| row[0]).collect();
            let (mean, _) = mean_and_var(&xs);
            for w in xs.windows(2) {
                num += (w[0] - mean) * (w[1] - mean);
            }
            for x in &xs {
                den += (x - mean) * (x - mean);
            }
        }
        let corr = num / den;
        assert!(
            (corr - expected).abs() <= 0.03 * expected.abs(),
            "lag-1 correlation {corr} vs {expected}"
        );
    }

    #[test]
    fn fbm_variance_growth() {
        // E[(B^H_1)²] = 1 for any H: sum 1/dt increments of a unit-time path.
        let h = 0.4;
        let steps = 256;
        let dt = 1.0 / steps as f64;
        let paths = 100_000;
        let mut sq = Vec::with_capacity(paths);
        for path_id in 0..paths {
            let p = fbm(member_seed(0xfbb, path_id as u64), steps, 1, dt, h).unwrap();
            let b1: f64 = p.increments.iter().map(|row| row[0]).sum();
            sq.push(b1 * b1);
        }
        let (mean, _) = mean_and_var(&sq);
        assert!((mean - 1.0).abs() <= 0.02, "E[B(1)²] = {mean}");
    }

    #[test]
    fn pure_area_driver() {
        let s = [[0.0, 1.0], [-1.0, 0.0]];
        let p = pure_area(10, DT, s).unwrap();
        assert_eq!(p.steps(), 10);
        assert_eq!(p.m(), 2);
        assert!(p.increments.iter().all(|row| row == &vec![0.0, 0.0]));
        let areas = p.areas.as_ref().unwrap();
        for a in areas {
            assert_eq!(a.get(0, 1), DT);
            assert_eq!(a.get(1, 0), -DT);
        }
        let total: f64 = areas.iter().map(|a| a.get(0, 1)).sum();
        assert_relative_eq!(total, 10.0 * DT, max_relative = 1e-12);

        let bad = [[0.0, 1.0], [-2.0, 0.0]];
        assert!(matches!(
            pure_area(3, DT, bad),
            Err(Error::NotAntisymmetric { .. })
        ));
    }

    #[test]
    fn csv_roundtrip_bit_identical() {
        let mut p = brownian(123, 7, 2, DT);
        p.attach_levy_areas(32);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = DrivingPath::read_csv(buf.as_slice()).unwrap();
        assert_eq!(p, q);

        let f = fbm(9, 5, 1, DT, 0.4).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = DrivingPath::read_csv(buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }
}
