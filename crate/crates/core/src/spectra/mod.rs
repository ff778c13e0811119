//! Quantum spectra: the effective angular number `m'`, analytic energies,
//! oscillator eigenfunctions, and a finite-difference radial eigensolver
//! that serves as an independent check of the energies.
//!
//! The radial operator acting on `psi(r)` (with `s = 1 + lambda r^2` and the
//! `-k/r^2` screening folded into `m'^2 = m^2 - 2k`) is
//!
//! ```text
//! H1 = -1/2 [ s^2 d2 + s (1 + 5 lambda r^2)/r d - s m'^2/r^2 + 3 lambda + 15/4 lambda^2 r^2 ]
//!      + V0(r) + lambda k
//! ```
//!
//! with `V0 = -1/r` (Coulomb) or `r^2/2` (oscillator).

mod residual;
mod solver;

pub use residual::{wavefunction_residual, ResidualStencil};
pub use solver::{radial_solve_numeric, GridVariable, NumericLevels, RadialGrid};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::SystemKind;
use crate::error::{Error, Result};
use crate::numeric::fmt17;

/// `m' = sqrt(m^2 - 2k)`. Requires `m^2 > 2k`; the unscreened `m = 0`
/// state (`k = 0`) is also admitted and gives `m' = 0`.
pub fn m_prime(m: i64, k: f64) -> Result<f64> {
    let m_sq = (m * m) as f64;
    let two_k = 2.0 * k;
    if m_sq > two_k || (k == 0.0 && m == 0) {
        Ok((m_sq - two_k).sqrt())
    } else {
        Err(Error::ImaginaryMPrime { m_sq, two_k })
    }
}

fn check_params(lambda: f64, k: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::NegativeCurvature(lambda));
    }
    if !k.is_finite() {
        return Err(Error::InvalidArgument(format!("k must be finite, got {k}")));
    }
    Ok(())
}

/// `E = lambda (m'+N)(m'+N+1)/2 - (m'+N+1/2)^-2 / 2 + lambda k`.
pub fn coulomb_energy(lambda: f64, k: f64, m: i64, n: u32) -> Result<f64> {
    check_params(lambda, k)?;
    let nu = m_prime(m, k)? + f64::from(n);
    Ok(0.5 * lambda * nu * (nu + 1.0) - 0.5 / (nu + 0.5).powi(2) + lambda * k)
}

/// `E = (1 + m' + 2N)(sqrt(4 + lambda^2) + lambda (1 + m' + 2N))/2 + lambda k`.
pub fn oscillator_energy(lambda: f64, k: f64, m: i64, n: u32) -> Result<f64> {
    check_params(lambda, k)?;
    let a = 1.0 + m_prime(m, k)? + 2.0 * f64::from(n);
    Ok(0.5 * a * ((4.0 + lambda * lambda).sqrt() + lambda * a) + lambda * k)
}

pub fn energy(kind: SystemKind, lambda: f64, k: f64, m: i64, n: u32) -> Result<f64> {
    match kind {
        SystemKind::ScreenedCoulomb => coulomb_energy(lambda, k, m, n),
        SystemKind::ScreenedOscillator => oscillator_energy(lambda, k, m, n),
    }
}

/// `F(-N, b; c; z)`, which terminates after `N + 1` terms. Evaluated by
/// nested multiplication from the last term inwards.
pub fn hypergeometric_terminating(n: u32, b: f64, c: f64, z: f64) -> Result<f64> {
    let a = -f64::from(n);
    for j in 0..n as usize {
        if c + j as f64 == 0.0 {
            return Err(Error::HypergeometricPole { term: j + 1, c });
        }
    }
    let mut acc = 1.0;
    for j in (0..n as usize).rev() {
        let jf = j as f64;
        acc = 1.0 + (a + jf) * (b + jf) / ((c + jf) * (jf + 1.0)) * z * acc;
    }
    Ok(acc)
}

/// Parameters `(eta, beta, gamma)` of the oscillator eigenfunction.
pub fn wavefunction_parameters(lambda: f64, m_prime: f64, n: u32) -> (f64, f64, f64) {
    let root = (4.0 + lambda * lambda).sqrt();
    let eta = 0.25 * (4.0 * lambda + 2.0 * lambda * m_prime + root);
    let beta = 1.0 + m_prime + f64::from(n) + root / (2.0 * lambda);
    (eta, beta, 1.0 + m_prime)
}

/// Smooth factor `g` of the radial eigenfunction `psi = r^m' g(r)`:
/// `g = (1 + lambda r^2)^(-eta/lambda) F(-N, beta; gamma; lambda r^2/(1 + lambda r^2))`.
pub fn oscillator_envelope(r: f64, lambda: f64, m_prime: f64, n: u32) -> Result<f64> {
    envelope_with(r, lambda, wavefunction_parameters(lambda, m_prime, n), n)
}

pub(crate) fn envelope_with(
    r: f64,
    lambda: f64,
    (eta, beta, gamma): (f64, f64, f64),
    n: u32,
) -> Result<f64> {
    let s = 1.0 + lambda * r * r;
    let z = lambda * r * r / s;
    Ok(s.powf(-eta / lambda) * hypergeometric_terminating(n, beta, gamma, z)?)
}

/// Radial part of the oscillator eigenfunction (unnormalized); the full
/// state is `exp(i m theta)` times this.
pub fn oscillator_wavefunction(r: f64, lambda: f64, k: f64, m: i64, n: u32) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::FlatCurvature);
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::NonPositiveRadius(r));
    }
    let mp = m_prime(m, k)?;
    Ok(r.powf(mp) * oscillator_envelope(r, lambda, mp, n)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumNumbers {
    pub m: i64,
    #[serde(rename = "N")]
    pub n: u32,
}

impl QuantumNumbers {
    pub fn new(m: i64, n: u32) -> Self {
        QuantumNumbers { m, n }
    }
}

pub const SPECTRUM_CSV_HEADER: &str = "kind,lambda,k,m,N,m_prime,E_analytic,E_numeric,abs_diff";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub kind: SystemKind,
    pub lambda: f64,
    pub k: f64,
    pub m: i64,
    #[serde(rename = "N")]
    pub n: u32,
    pub m_prime: f64,
    #[serde(rename = "E_analytic")]
    pub e_analytic: f64,
    #[serde(rename = "E_numeric")]
    pub e_numeric: Option<f64>,
    pub abs_diff: Option<f64>,
}

impl SpectrumEntry {
    pub fn analytic(kind: SystemKind, lambda: f64, k: f64, qn: QuantumNumbers) -> Result<Self> {
        Ok(SpectrumEntry {
            kind,
            lambda,
            k,
            m: qn.m,
            n: qn.n,
            m_prime: m_prime(qn.m, k)?,
            e_analytic: energy(kind, lambda, k, qn.m, qn.n)?,
            e_numeric: None,
            abs_diff: None,
        })
    }

    pub fn with_numeric(mut self, e: f64) -> Self {
        self.e_numeric = Some(e);
        self.abs_diff = Some((self.e_analytic - e).abs());
        self
    }

    pub fn rel_diff(&self) -> Option<f64> {
        self.abs_diff
            .map(|d| d / self.e_analytic.abs().max(f64::MIN_POSITIVE))
    }

    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(fmt17).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.kind.as_str(),
            fmt17(self.lambda),
            fmt17(self.k),
            self.m,
            self.n,
            fmt17(self.m_prime),
            fmt17(self.e_analytic),
            opt(self.e_numeric),
            opt(self.abs_diff),
        )
    }
}

pub fn write_spectrum_csv<W: Write>(mut w: W, entries: &[SpectrumEntry]) -> Result<()> {
    writeln!(w, "{SPECTRUM_CSV_HEADER}")?;
    for e in entries {
        writeln!(w, "{}", e.csv_row())?;
    }
    Ok(())
}

/// Analytic levels `N = 0..n_levels` for one `m`, each paired with the
/// numeric eigenvalue of the same index.
pub fn spectrum_table(
    kind: SystemKind,
    lambda: f64,
    k: f64,
    m: i64,
    n_levels: usize,
    numeric: bool,
) -> Result<Vec<SpectrumEntry>> {
    let levels = if numeric {
        let grid = RadialGrid::default_for(kind, lambda, k, m, n_levels)?;
        Some(radial_solve_numeric(kind, lambda, k, m, n_levels, &grid)?)
    } else {
        None
    };
    (0..n_levels)
        .map(|n| {
            let e = SpectrumEntry::analytic(kind, lambda, k, QuantumNumbers::new(m, n as u32))?;
            Ok(match &levels {
                Some(l) => e.with_numeric(l.values[n]),
                None => e,
            })
        })
        .collect()
}

/// Energies of a pair of states at `k = 0` and at the requested `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracySplit {
    pub a: QuantumNumbers,
    pub b: QuantumNumbers,
    pub unscreened: [f64; 2],
    /// Whether the unscreened energies agree to rounding.
    pub degenerate_unscreened: bool,
    pub screened: [f64; 2],
    /// `E_b - E_a` at the requested `k`.
    pub gap: f64,
    /// The same gap from the numeric eigensolver, when requested.
    pub gap_numeric: Option<f64>,
}

pub fn degeneracy_split_report(
    kind: SystemKind,
    lambda: f64,
    k: f64,
    pairs: &[(QuantumNumbers, QuantumNumbers)],
    numeric: bool,
) -> Result<Vec<DegeneracySplit>> {
    pairs
        .iter()
        .map(|&(a, b)| {
            let u = [
                energy(kind, lambda, 0.0, a.m, a.n)?,
                energy(kind, lambda, 0.0, b.m, b.n)?,
            ];
            let s = [
                energy(kind, lambda, k, a.m, a.n)?,
                energy(kind, lambda, k, b.m, b.n)?,
            ];
            let gap_numeric = if numeric {
                let level = |q: QuantumNumbers| -> Result<f64> {
                    let n_levels = q.n as usize + 1;
                    let grid = RadialGrid::default_for(kind, lambda, k, q.m, n_levels)?;
                    Ok(
                        radial_solve_numeric(kind, lambda, k, q.m, n_levels, &grid)?.values
                            [q.n as usize],
                    )
                };
                Some(level(b)? - level(a)?)
            } else {
                None
            };
            Ok(DegeneracySplit {
                a,
                b,
                unscreened: u,
                degenerate_unscreened: (u[0] - u[1]).abs()
                    <= 4.0 * f64::EPSILON * u[0].abs().max(1.0),
                screened: s,
                gap: s[1] - s[0],
                gap_numeric,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    use SystemKind::{ScreenedCoulomb as Coulomb, ScreenedOscillator as Oscillator};

    #[test]
    fn m_prime_examples() {
        assert_eq!(m_prime(1, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(m_prime(1, 0.05).unwrap(), 0.9f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(m_prime(-2, 0.05).unwrap(), 3.9f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(
            m_prime(0, 0.05),
            Err(Error::ImaginaryMPrime { .. })
        ));
        assert!(m_prime(1, 0.5).is_err());
        assert_eq!(m_prime(0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn coulomb_examples() {
        assert_abs_diff_eq!(coulomb_energy(0.0, 0.0, 0, 0).unwrap(), -2.0);
        assert_abs_diff_eq!(
            coulomb_energy(0.1, 0.0, 1, 0).unwrap(),
            0.1 - 0.5 / 2.25,
            epsilon = 1e-15
        );
    }

    #[test]
    fn oscillator_examples() {
        assert_eq!(oscillator_energy(0.0, 0.0, 0, 0).unwrap(), 1.0);
        assert_eq!(oscillator_energy(0.0, 0.0, 1, 1).unwrap(), 4.0);
    }

    #[test]
    fn limits() {
        for m in [1i64, 2, 3] {
            for n in 0..4u32 {
                let nf = f64::from(n);
                let mf = m as f64;
                // unscreened curved Coulomb: m' -> |m|
                let lam = 0.3;
                let higgs = 0.5 * lam * (mf + nf) * (mf + nf + 1.0) - 0.5 / (mf + nf + 0.5).powi(2);
                assert_abs_diff_eq!(
                    coulomb_energy(lam, 1e-12, m, n).unwrap(),
                    higgs,
                    epsilon = 1e-9
                );
                // flat screened Coulomb
                let k = 0.05;
                let mp = (mf * mf - 2.0 * k).sqrt();
                let flat = -0.5 / (nf + mp + 0.5).powi(2);
                assert_abs_diff_eq!(
                    coulomb_energy(1e-12, k, m, n).unwrap(),
                    flat,
                    epsilon = 1e-9
                );
                // oscillator
                let curved = 0.5
                    * (1.0 + mf + 2.0 * nf)
                    * ((4.0 + lam * lam).sqrt() + lam * (1.0 + mf + 2.0 * nf));
                assert_abs_diff_eq!(
                    oscillator_energy(lam, 1e-12, m, n).unwrap(),
                    curved,
                    epsilon = 1e-9
                );
                let flat = 1.0 + mp + 2.0 * nf;
                assert_abs_diff_eq!(
                    oscillator_energy(1e-12, k, m, n).unwrap(),
                    flat,
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn monotone_in_n() {
        for kind in [Coulomb, Oscillator] {
            for lambda in [0.0, 0.05, 0.1] {
                for k in [0.0, 0.02, 0.05] {
                    for m in [1i64, 2] {
                        let e: Vec<f64> = (0..6)
                            .map(|n| energy(kind, lambda, k, m, n).unwrap())
                            .collect();
                        assert!(
                            e.windows(2).all(|w| w[1] > w[0]),
                            "{kind:?} {lambda} {k} {m}: {e:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn hypergeometric_examples() {
        for (b, c, z) in [(0.3, 1.7, 0.2), (5.0, 2.0, 0.9)] {
            assert_eq!(hypergeometric_terminating(0, b, c, z).unwrap(), 1.0);
        }
        assert_eq!(hypergeometric_terminating(1, 2.0, 1.0, 0.5).unwrap(), 0.0);
        assert!(matches!(
            hypergeometric_terminating(3, 1.0, -1.0, 0.5),
            Err(Error::HypergeometricPole { term: 2, .. })
        ));
        // the pole lies beyond termination
        assert!(hypergeometric_terminating(1, 1.0, -1.0, 0.5).is_ok());
    }

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    fn pochhammer(x: f64, j: u32) -> f64 {
        (0..j).map(|i| x + f64::from(i)).product()
    }

    #[test]
    fn hypergeometric_matches_factorial_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let n: u32 = rng.gen_range(0..=10);
            let b: f64 = rng.gen_range(0.1..30.0);
            let c: f64 = rng.gen_range(0.5..4.0);
            let z: f64 = rng.gen_range(0.0..0.9);
            // (-N)_j = (-1)^j N!/(N-j)!
            let direct: f64 = (0..=n)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign * factorial(n) / factorial(n - j) * pochhammer(b, j) / pochhammer(c, j)
                        * z.powi(j as i32)
                        / factorial(j)
                })
                .sum();
            let scale: f64 = (0..=n)
                .map(|j| {
                    factorial(n) / factorial(n - j) * pochhammer(b, j) / pochhammer(c, j)
                        * z.powi(j as i32)
                        / factorial(j)
                })
                .sum();
            let horner = hypergeometric_terminating(n, b, c, z).unwrap();
            assert!(
                (horner - direct).abs() <= 1e-12 * scale.max(direct.abs()),
                "{n} {b} {c} {z}"
            );
        }
    }

    #[test]
    fn wavefunction_shape() {
        let (lambda, k, m) = (0.1, 0.05, 1);
        let mp = m_prime(m, k).unwrap();
        let lead: Vec<f64> = [1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&r| oscillator_wavefunction(r, lambda, k, m, 2).unwrap() / r.powf(mp))
            .collect();
        assert_relative_eq!(lead[1], lead[2], max_relative = 1e-8);
        assert!(lead[2] > 0.0);
        for i in 1..2000 {
            let r = 0.005 * f64::from(i);
            assert!(oscillator_wavefunction(r, lambda, k, m, 0).unwrap() > 0.0);
        }
        // N = 2 has two radial nodes
        let signs: Vec<bool> = (1..4000)
            .map(|i| oscillator_wavefunction(0.005 * f64::from(i), lambda, k, m, 2).unwrap() > 0.0)
            .collect();
        assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 2);
        assert!(oscillator_wavefunction(1.0, 0.0, k, m, 0).is_err());
        assert!(oscillator_wavefunction(1.0, lambda, 0.05, 0, 0).is_err());
    }

    #[test]
    fn degeneracy_pairs() {
        let q = QuantumNumbers::new;
        let rep =
            degeneracy_split_report(Coulomb, 0.0, 0.05, &[(q(1, 1), q(2, 0))], false).unwrap();
        assert!(rep[0].degenerate_unscreened);
        assert_abs_diff_eq!(rep[0].unscreened[0], -0.5 / 6.25, epsilon = 1e-15);
        let nu = |m: f64, n: f64| (m * m - 0.1f64).sqrt() + n + 0.5;
        assert_abs_diff_eq!(
            rep[0].gap,
            -0.5 / nu(2.0, 0.0).powi(2) + 0.5 / nu(1.0, 1.0).powi(2),
            epsilon = 1e-15
        );
        assert!(rep[0].gap.abs() > 1e-3);

        let rep =
            degeneracy_split_report(Oscillator, 0.0, 0.05, &[(q(4, 0), q(2, 1))], false).unwrap();
        assert!(rep[0].degenerate_unscreened);
        assert_eq!(rep[0].unscreened, [5.0, 5.0]);
        assert!(rep[0].gap.abs() > 1e-3);
    }

    #[test]
    fn entry_csv_and_json() {
        let e = SpectrumEntry::analytic(Oscillator, 0.0, 0.0, QuantumNumbers::new(0, 0)).unwrap();
        assert_eq!(
            e.csv_row(),
            "oscillator,0.0000000000000000e0,0.0000000000000000e0,0,0,0.0000000000000000e0,1.0000000000000000e0,,"
        );
        let v = serde_json::to_value(e.clone().with_numeric(1.25)).unwrap();
        assert_eq!(v["E_analytic"], 1.0);
        assert_eq!(v["E_numeric"], 1.25);
        assert_eq!(v["abs_diff"], 0.25);
        assert_eq!(v["N"], 0);
        assert_eq!(v["kind"], "oscillator");
        let v = serde_json::to_value(&e).unwrap();
        assert!(v["E_numeric"].is_null());
    }
}
