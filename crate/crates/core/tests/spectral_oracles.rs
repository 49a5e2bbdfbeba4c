use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tgv_core::spectral::{taylor_green_init, Spectral, SpectralVectorField, WaveGrid};

/// Double-double number `hi + lo`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    fn div_int(self, d: f64) -> Dd {
        let q = self.hi / d;
        let r = self.add(Dd::from(q).mul(Dd::from(-d)));
        Dd::from(q).add(Dd::from(r.hi / d))
    }

    fn powi(self, mut n: u32) -> Dd {
        let (mut base, mut acc) = (self, Dd::from(1.0));
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            n >>= 1;
        }
        acc
    }

    fn ln(self) -> f64 {
        self.hi.ln() + self.lo / self.hi
    }
}

fn random_field(grid: &Arc<WaveGrid>, seed: u64) -> SpectralVectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SpectralVectorField::zeros(grid.clone());
    for c in 0..3 {
        for (idx, z) in s.component_mut(c).iter_mut().enumerate() {
            if grid.keep(idx) {
                *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
    }
    s.enforce_hermitian();
    s
}

/// `ln ||(2 pi |m|)^n u||_inf` by direct summation of the Fourier series at
/// every grid point, with the multiplier normalized as `(|m| / m_max)^n` and
/// all weights and sums carried in double-double arithmetic.
fn oracle_log_norm(s: &SpectralVectorField, n: u32) -> f64 {
    let grid = s.grid();
    let size = grid.n();
    let m_max_sq = 3 * (grid.cutoff() * grid.cutoff()) as i64;
    let modes: Vec<(usize, [i64; 3], Dd)> = (0..grid.spectral_len())
        .filter(|&idx| (0..3).any(|c| s.component(c)[idx] != Complex64::new(0.0, 0.0)))
        .map(|idx| {
            let m = grid.modes_of(idx);
            let r = Dd::from(grid.mode_norm_sq(idx) as f64).div_int(m_max_sq as f64);
            let w = if n == 0 {
                Dd::from(1.0)
            } else if n.is_multiple_of(2) {
                r.powi(n / 2)
            } else {
                r.powi(n / 2).mul(Dd::from((r.hi + r.lo).sqrt()))
            };
            (idx, m, w.mul(Dd::from(grid.hermitian_weight(idx))))
        })
        .collect();
    let twiddle: Vec<(f64, f64)> = (0..size)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / size as f64;
            (th.cos(), th.sin())
        })
        .collect();
    let mut best = Dd::ZERO;
    for i1 in 0..size {
        for i2 in 0..size {
            for i3 in 0..size {
                for c in 0..3 {
                    let mut acc = Dd::ZERO;
                    for (idx, m, w) in &modes {
                        let z = s.component(c)[*idx];
                        if z.re == 0.0 && z.im == 0.0 {
                            continue;
                        }
                        let phase = (m[0] * i1 as i64 + m[1] * i2 as i64 + m[2] * i3 as i64).rem_euclid(size as i64);
                        let (cs, sn) = twiddle[phase as usize];
                        let re = Dd::from(z.re).mul(Dd::from(cs)).add(Dd::from(-z.im).mul(Dd::from(sn)));
                        acc = acc.add(w.mul(re));
                    }
                    if acc.hi.abs() > best.hi.abs() {
                        best = acc;
                    }
                }
            }
        }
    }
    let best = if best.hi < 0.0 {
        Dd {
            hi: -best.hi,
            lo: -best.lo,
        }
    } else {
        best
    };
    n as f64 * (2.0 * PI * (m_max_sq as f64).sqrt()).ln() + best.ln()
}

#[test]
fn order_200_matches_extended_precision_oracle() {
    let sp = Spectral::new(WaveGrid::new(16).unwrap());
    let grid = sp.grid().clone();
    for (seed, field) in [
        (0, random_field(&grid, 3)),
        (1, {
            let u = taylor_green_init(grid.clone());
            let mut v = u.clone();
            v.axpy(0.4, &sp.nonlinear_term(&u).unwrap());
            v
        }),
    ] {
        for n in [0u32, 1, 5, 50, 200] {
            let got = sp.log_sup_norm(&field, n).unwrap().value;
            let want = oracle_log_norm(&field, n);
            let rel = ((got - want) / want.abs().max(1.0)).abs();
            assert!(rel <= 1e-8, "field {seed} n={n}: {got} vs {want}");
        }
    }
}

#[test]
fn order_200_on_taylor_green_n64_is_finite() {
    let sp = Spectral::new(WaveGrid::new(64).unwrap());
    let u = taylor_green_init(sp.grid().clone());
    let v = sp.log_sup_norm(&u, 200).unwrap().value;
    assert!(v.is_finite());
    let shell = 200.0 * (2.0 * PI * 3f64.sqrt()).ln();
    assert!((v - shell).abs() < 1e-10 * shell, "{v} vs {shell}");
}

#[test]
fn shared_operator_is_thread_safe_and_deterministic() {
    let sp = Arc::new(Spectral::new(WaveGrid::new(16).unwrap()));
    let u = Arc::new(random_field(sp.grid(), 11));
    let reference = sp.nonlinear_term(&u).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let (sp, u) = (sp.clone(), u.clone());
            std::thread::spawn(move || (sp.nonlinear_term(&u).unwrap(), sp.log_sup_norm(&u, 40).unwrap()))
        })
        .collect();
    let norm = sp.log_sup_norm(&u, 40).unwrap();
    for h in handles {
        let (nl, ln) = h.join().unwrap();
        assert_eq!(nl, reference);
        assert_eq!(ln, norm);
    }
}
