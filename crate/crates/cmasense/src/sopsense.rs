//! Stokes-space sensing back end.
//!
//! A converged 2x2 equalizer is a time-varying estimate of the channel's
//! inverse Jones matrix. Probing that matrix with a constant Jones vector
//! and converting the output to a normalized Stokes vector turns the tap
//! history into a trajectory on the Poincaré sphere. This module does the
//! conversion and the trajectory post-processing: centroid extraction,
//! rotation of the centroid to the north pole, DC removal, and the angular
//! RMSE between two trajectories.
//!
//! Sign convention: `S3 = 2*Im(vx* vy)`, i.e. right-circular maps to +S3.
//! Any consistent convention works because the angular metrics compare
//! like with like.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A 2x2 complex Jones matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix {
    pub m: [[Complex64; 2]; 2],
}

impl JonesMatrix {
    pub fn identity() -> Self {
        JonesMatrix {
            m: [
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            ],
        }
    }

    pub fn mul_vec(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn mul_mat(&self, other: &JonesMatrix) -> JonesMatrix {
        let mut out = [[Complex64::default(); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, slot) in row.iter_mut().enumerate() {
                *slot = self.m[r][0] * other.m[0][c] + self.m[r][1] * other.m[1][c];
            }
        }
        JonesMatrix { m: out }
    }

    /// Conjugate transpose; the inverse of a unitary matrix.
    pub fn dagger(&self) -> JonesMatrix {
        JonesMatrix {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, s: Complex64) -> JonesMatrix {
        let mut out = *self;
        for row in &mut out.m {
            for slot in row {
                *slot *= s;
            }
        }
        out
    }

    /// Frobenius distance to the identity of `self * self^H`; zero for a
    /// unitary matrix.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.mul_mat(&self.dagger());
        let mut err = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 1.0 } else { 0.0 };
                err += (p.m[r][c] - want).norm_sqr();
            }
        }
        err.sqrt()
    }
}

/// A sequence of unit Stokes vectors with its sampling rate (in samples per
/// symbol period, i.e. the equalizer's snapshot cadence).
#[derive(Debug, Clone, PartialEq)]
pub struct StokesTrajectory {
    pub samples: Vec<[f64; 3]>,
    pub sample_rate_norm: f64,
}

impl StokesTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Extract one Stokes component as a real series.
    pub fn component(&self, idx: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[idx]).collect()
    }
}

/// How a Jones matrix is read out of an equalizer snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JonesExtraction {
    /// Sum of each branch's taps: the DC frequency response. The SOP
    /// rotation is narrowband relative to the equalizer, so this is what a
    /// single-tap equalizer would estimate.
    #[default]
    DcResponse,
    /// Center tap only; kept for sensitivity studies.
    CenterTap,
}

/// Collapse one 2x2 set of tap vectors into the inverse Jones estimate.
pub fn taps_to_jones(
    h_xx: &[Complex64],
    h_xy: &[Complex64],
    h_yx: &[Complex64],
    h_yy: &[Complex64],
    mode: JonesExtraction,
) -> Result<JonesMatrix> {
    let collapse = |taps: &[Complex64]| -> Complex64 {
        match mode {
            JonesExtraction::DcResponse => taps.iter().sum(),
            JonesExtraction::CenterTap => taps[taps.len() / 2],
        }
    };
    let m = JonesMatrix {
        m: [
            [collapse(h_xx), collapse(h_xy)],
            [collapse(h_yx), collapse(h_yy)],
        ],
    };
    let norm: f64 = m.m.iter().flatten().map(|z| z.norm_sqr()).sum();
    if norm == 0.0 {
        return Err(Error::diagnostic("all-zero tap snapshot has no Jones matrix"));
    }
    Ok(m)
}

/// Normalized Stokes vector of a Jones vector. Errors when the vector has
/// no power.
pub fn jones_to_stokes(v: [Complex64; 2]) -> Result<[f64; 3]> {
    let s0 = v[0].norm_sqr() + v[1].norm_sqr();
    if s0 <= 0.0 {
        return Err(Error::diagnostic("zero-power Jones vector has no Stokes direction"));
    }
    let cross = v[0].conj() * v[1];
    Ok([
        (v[0].norm_sqr() - v[1].norm_sqr()) / s0,
        2.0 * cross.re / s0,
        2.0 * cross.im / s0,
    ])
}

/// Probe a series of (inverse-channel) Jones matrices with a constant
/// Jones vector, producing the SOP trajectory.
pub fn probe_stokes(
    jones: &[JonesMatrix],
    sample_rate_norm: f64,
    probe: [Complex64; 2],
) -> Result<StokesTrajectory> {
    if probe[0].norm_sqr() + probe[1].norm_sqr() == 0.0 {
        return Err(Error::config("probe Jones vector must be nonzero"));
    }
    let samples = jones
        .iter()
        .map(|j| jones_to_stokes(j.mul_vec(probe)))
        .collect::<Result<Vec<_>>>()?;
    Ok(StokesTrajectory {
        samples,
        sample_rate_norm,
    })
}

/// Default probe: the x-polarized unit Jones vector.
pub fn default_probe() -> [Complex64; 2] {
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
}

/// Normalized time-averaged Stokes vector of a trajectory.
///
/// Only meaningful when the trajectory is confined to a spherical cap; a
/// mean shorter than 0.1 is treated as degenerate.
pub fn centroid(traj: &StokesTrajectory) -> Result<[f64; 3]> {
    if traj.is_empty() {
        return Err(Error::config("cannot take the centroid of an empty trajectory"));
    }
    let mut mean = [0.0f64; 3];
    for s in &traj.samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= traj.len() as f64;
    }
    let norm = (mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]).sqrt();
    if norm <= 0.1 {
        return Err(Error::diagnostic(format!(
            "degenerate trajectory: centroid norm {norm:.3} <= 0.1"
        )));
    }
    Ok([mean[0] / norm, mean[1] / norm, mean[2] / norm])
}

/// 3x3 rotation matrix taking the unit vector `c` to the north pole
/// (0,0,1), built by Rodrigues' formula about the axis `c x z`.
///
/// `c = z` gives the identity; `c = -z` rotates by pi about the S1 axis
/// (a documented convention; any axis in the equator would do).
pub fn north_pole_rotation(c: [f64; 3]) -> [[f64; 3]; 3] {
    let z = [0.0, 0.0, 1.0];
    let axis = [c[1] * z[2] - c[2] * z[1], c[2] * z[0] - c[0] * z[2], 0.0];
    let axis_norm = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
    let cos_a = c[2].clamp(-1.0, 1.0);
    if axis_norm < 1e-12 {
        if cos_a > 0.0 {
            return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        }
        // Antipodal centroid: half turn about S1.
        return [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]];
    }
    let k = [axis[0] / axis_norm, axis[1] / axis_norm, 0.0];
    let sin_a = (1.0 - cos_a * cos_a).max(0.0).sqrt();
    let mut r = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let eye = if i == j { 1.0 } else { 0.0 };
            // K = cross-product matrix of k; R = I + sin*K + (1-cos)*K^2.
            let kij = cross_matrix(k, i, j);
            let k2ij = (0..3).map(|l| cross_matrix(k, i, l) * cross_matrix(k, l, j)).sum::<f64>();
            r[i][j] = eye + sin_a * kij + (1.0 - cos_a) * k2ij;
        }
    }
    r
}

fn cross_matrix(k: [f64; 3], i: usize, j: usize) -> f64 {
    match (i, j) {
        (0, 1) => -k[2],
        (0, 2) => k[1],
        (1, 0) => k[2],
        (1, 2) => -k[0],
        (2, 0) => -k[1],
        (2, 1) => k[0],
        _ => 0.0,
    }
}

/// Apply the centroid-to-north-pole rotation to every sample.
pub fn rotate_to_north_pole(traj: &StokesTrajectory, c: [f64; 3]) -> StokesTrajectory {
    let r = north_pole_rotation(c);
    let samples = traj
        .samples
        .iter()
        .map(|s| apply_rotation(&r, *s))
        .collect();
    StokesTrajectory {
        samples,
        sample_rate_norm: traj.sample_rate_norm,
    }
}

pub fn apply_rotation(r: &[[f64; 3]; 3], s: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0f64; 3];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = r[i][0] * s[0] + r[i][1] * s[1] + r[i][2] * s[2];
    }
    out
}

/// S1 and S2 component series with their means removed.
pub fn remove_dc(traj: &StokesTrajectory) -> (Vec<f64>, Vec<f64>) {
    let strip = |mut series: Vec<f64>| -> Vec<f64> {
        let mean = series.iter().sum::<f64>() / series.len().max(1) as f64;
        for v in &mut series {
            *v -= mean;
        }
        series
    };
    (strip(traj.component(0)), strip(traj.component(1)))
}

/// Angular root-mean-square error between two equal-length unit-vector
/// trajectories, in degrees:
/// `(180/pi) * sqrt(mean(acos(clamp(dot, -1, 1))^2))`.
pub fn angular_rmse(reference: &StokesTrajectory, test: &StokesTrajectory) -> Result<f64> {
    if reference.len() != test.len() {
        return Err(Error::config(format!(
            "trajectory length mismatch: {} vs {}",
            reference.len(),
            test.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::config("angular RMSE needs at least one sample"));
    }
    for (i, s) in reference.samples.iter().chain(test.samples.iter()).enumerate() {
        let norm2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
        if (norm2 - 1.0).abs() > 1e-6 {
            return Err(Error::config(format!(
                "non-unit Stokes sample (index {i}, |s|^2 = {norm2})"
            )));
        }
    }
    let sum_sq: f64 = reference
        .samples
        .iter()
        .zip(&test.samples)
        .map(|(a, b)| {
            let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
            dot.acos().powi(2)
        })
        .sum();
    Ok((sum_sq / reference.len() as f64).sqrt().to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn traj(samples: Vec<[f64; 3]>) -> StokesTrajectory {
        StokesTrajectory {
            samples,
            sample_rate_norm: 0.5,
        }
    }

    fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
        loop {
            let v: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 0.1 && n <= 1.0 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    #[test]
    fn stokes_conventions() {
        let s = jones_to_stokes([c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(s, [1.0, 0.0, 0.0]);
        let inv = 1.0 / 2.0f64.sqrt();
        let s = jones_to_stokes([c(inv, 0.0), c(inv, 0.0)]).unwrap();
        assert!((s[1] - 1.0).abs() < 1e-12 && s[0].abs() < 1e-12);
        let s = jones_to_stokes([c(inv, 0.0), c(0.0, inv)]).unwrap();
        assert!((s[2] - 1.0).abs() < 1e-12);
        assert!(jones_to_stokes([c(0.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn taps_to_jones_identity_spike() {
        let spike = vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let zero = vec![c(0.0, 0.0); 5];
        let j = taps_to_jones(&spike, &zero, &zero, &spike, JonesExtraction::DcResponse).unwrap();
        assert_eq!(j, JonesMatrix::identity());
        let j = taps_to_jones(&spike, &zero, &zero, &spike, JonesExtraction::CenterTap).unwrap();
        assert_eq!(j, JonesMatrix::identity());
        assert!(taps_to_jones(&zero, &zero, &zero, &zero, JonesExtraction::DcResponse).is_err());
    }

    #[test]
    fn taps_to_jones_phase_spike() {
        let theta = 0.7f64;
        let ph = Complex64::from_polar(1.0, theta);
        let spike = vec![c(0.0, 0.0), ph, c(0.0, 0.0)];
        let zero = vec![c(0.0, 0.0); 3];
        let j = taps_to_jones(&spike, &zero, &zero, &spike, JonesExtraction::DcResponse).unwrap();
        assert!((j.m[0][0] - ph).norm() < 1e-15);
        assert!((j.m[1][1] - ph).norm() < 1e-15);
    }

    #[test]
    fn probe_scalar_invariance() {
        // Multiplying the Jones estimate by any nonzero complex scalar does
        // not move the Stokes output: equalizer gain/phase is irrelevant.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let j = JonesMatrix {
                m: [
                    [c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))],
                    [c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))],
                ],
            };
            let scalar = c(rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0));
            let a = probe_stokes(&[j], 0.5, default_probe()).unwrap();
            let b = probe_stokes(&[j.scale(scalar)], 0.5, default_probe()).unwrap();
            for k in 0..3 {
                assert!((a.samples[0][k] - b.samples[0][k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn centroid_basics() {
        let t = traj(vec![[0.0, 1.0, 0.0]; 4]);
        assert_eq!(centroid(&t).unwrap(), [0.0, 1.0, 0.0]);

        // Two points symmetric about z average to z.
        let a = [0.3, 0.0, (1.0f64 - 0.09).sqrt()];
        let b = [-0.3, 0.0, (1.0f64 - 0.09).sqrt()];
        let c = centroid(&traj(vec![a, b])).unwrap();
        assert!((c[2] - 1.0).abs() < 1e-12 && c[0].abs() < 1e-12);

        // Antipodal pair has zero mean.
        assert!(centroid(&traj(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])).is_err());
    }

    #[test]
    fn north_pole_rotation_cases() {
        let t = traj(vec![[0.0, 0.6, 0.8], [0.0, -0.6, 0.8]]);
        let same = rotate_to_north_pole(&t, [0.0, 0.0, 1.0]);
        assert_eq!(same.samples, t.samples);

        let r = north_pole_rotation([1.0, 0.0, 0.0]);
        let moved = apply_rotation(&r, [1.0, 0.0, 0.0]);
        assert!((moved[2] - 1.0).abs() < 1e-12);

        // South pole flips about S1.
        let r = north_pole_rotation([0.0, 0.0, -1.0]);
        assert_eq!(apply_rotation(&r, [0.0, 0.0, -1.0]), [0.0, 0.0, 1.0]);
        assert_eq!(apply_rotation(&r, [1.0, 0.0, 0.0]), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn rotation_properties_over_random_centroids() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let c = random_unit(&mut rng);
            let r = north_pole_rotation(c);
            // R^T R = I
            for i in 0..3 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|l| r[l][i] * r[l][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-9);
                }
            }
            // det R = 1
            let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
                - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
                + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
            assert!((det - 1.0).abs() < 1e-9);
            // R c = z
            let top = apply_rotation(&r, c);
            assert!((top[0].abs() + top[1].abs() + (top[2] - 1.0).abs()) < 1e-9);
        }
    }

    #[test]
    fn remove_dc_basics() {
        let t = traj(vec![[0.5, -0.25, 0.0]; 8]);
        let (s1, s2) = remove_dc(&t);
        assert!(s1.iter().all(|v| v.abs() < 1e-15));
        assert!(s2.iter().all(|v| v.abs() < 1e-15));

        let n = 64;
        let wave: Vec<[f64; 3]> = (0..n)
            .map(|i| {
                let ph = std::f64::consts::TAU * i as f64 / n as f64;
                [ph.sin() * 0.3 + 0.7, ph.cos() * 0.3, 0.0]
            })
            .collect();
        let (s1, s2) = remove_dc(&traj(wave.clone()));
        for (i, w) in wave.iter().enumerate() {
            let ph = std::f64::consts::TAU * i as f64 / n as f64;
            assert!((s1[i] - ph.sin() * 0.3).abs() < 1e-12);
            assert!((s2[i] - w[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn angular_rmse_basics() {
        let a = traj(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(angular_rmse(&a, &a).unwrap(), 0.0);

        let b = traj(vec![[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]);
        assert!((angular_rmse(&a, &b).unwrap() - 90.0).abs() < 1e-12);

        let th = 10f64.to_radians();
        let one = traj(vec![[1.0, 0.0, 0.0]]);
        let tilted = traj(vec![[th.cos(), th.sin(), 0.0]]);
        assert!((angular_rmse(&one, &tilted).unwrap() - 10.0).abs() < 1e-9);

        assert!(angular_rmse(&a, &one).is_err());
        let bad = traj(vec![[0.5, 0.0, 0.0]]);
        assert!(angular_rmse(&one, &bad).is_err());
    }

    #[test]
    fn angular_rmse_rotation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = traj((0..64).map(|_| random_unit(&mut rng)).collect());
        let b = traj((0..64).map(|_| random_unit(&mut rng)).collect());
        let base = angular_rmse(&a, &b).unwrap();
        for _ in 0..20 {
            let r = north_pole_rotation(random_unit(&mut rng));
            let ra = traj(a.samples.iter().map(|s| apply_rotation(&r, *s)).collect());
            let rb = traj(b.samples.iter().map(|s| apply_rotation(&r, *s)).collect());
            let rot = angular_rmse(&ra, &rb).unwrap();
            assert!((rot - base).abs() < 1e-9);
        }
    }
}
