//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the report is always printed; exits non-zero if any check fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;

use scarlab::basis::{expected_dimension, fibonacci, product_state, Boundary, ConstrainedBasis, Pattern};
use scarlab::dynamics::{
    bond_correlator, evolve, linear_fit, oscillation_analysis, AnalysisOptions, Method, QuenchOptions, TimeGrid,
};
use scarlab::fsa::run_fsa;
use scarlab::hamiltonian::{assemble_full, OperatorSpec};
use scarlab::linalg::{hermitian_eigh, symmetric_eigh};
use scarlab::scars::{analyze_band, pr2_enhancement};
use scarlab::spectral::levels::{goe_control, poisson_control, Reference, DEFAULT_UNFOLD_DEGREE};
use scarlab::spectral::{diagonalize, level_statistics, standard_window, zero_modes, ZeroModeOptions};
use scarlab::symmetry::{build_sector, Block, Parity};

// Pinned tolerances and limits.
const DIMENSION_MAX_L: usize = 24;
const DIMENSION_TIME: Duration = Duration::from_secs(10);
const SECTOR_L: usize = 32;
const SECTOR_DIMENSION: usize = 77436;
const SECTOR_TIME: Duration = Duration::from_secs(120);
const REFLECTION_MAX_L: usize = 16;
const REFLECTION_TOL: f64 = 1e-8;
const ZERO_MODE_MAX_L: usize = 16;
const STAGGER: f64 = 0.3;
/// Largest L at which integer kernel vectors are produced for the staggered
/// Hamiltonian; the count itself is certified up to `ZERO_MODE_MAX_L`.
const STAGGER_BASIS_MAX_L: usize = 12;
const FSA_MAX_L: usize = 32;
const FSA_CLOSURE_TOL: f64 = 1e-10;
const FSA_MEAN_ERR: (f64, f64) = (0.001, 0.003);
const FSA_TIME: Duration = Duration::from_secs(600);
const OMEGA: f64 = 1.33;
const OMEGA_REL_TOL: f64 = 0.05;
const BAND_FSA_REL_TOL: f64 = 0.03;
const PERIOD: f64 = 2.35;
const PERIOD_TOL: f64 = 0.10;
const RESIDUAL_PERIOD_REL_TOL: f64 = 0.05;
const REVIVAL_THRESHOLD: f64 = 0.1;
const DYNAMICS_TIME: Duration = Duration::from_secs(300);
const SLOPE_L: usize = 24;
const SLOPE_WINDOW: f64 = 6.0;
const LEVEL_L: usize = 28;
const LEVEL_FALLBACK_L: usize = 24;
const PR2_LENGTHS: [usize; 4] = [12, 16, 20, 24];
const ORACLE_LENGTHS: [usize; 3] = [8, 10, 12];
const ORACLE_TOL: f64 = 1e-8;

type Check = (bool, String);

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("dimension formulas", criterion_1),
        ("sector dimension at L=32", criterion_2),
        ("spectral reflection", criterion_3),
        ("zero modes", criterion_4),
        ("forward scattering approximation", criterion_5),
        ("special band", criterion_6),
        ("quench dynamics", criterion_7),
        ("entropy slope ordering", criterion_8),
        ("level statistics", criterion_9),
        ("PR2 enhancement", criterion_10),
        ("sector vs full-basis oracle", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {name}: {detail} ({:.1} s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn blockade_ok(bits: u32, length: usize, periodic: bool) -> bool {
    let pairs = bits & (bits >> 1);
    let wrap = periodic && length > 1 && bits & 1 == 1 && (bits >> (length - 1)) & 1 == 1;
    pairs == 0 && !wrap
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut bad = Vec::new();
    for length in 2..=DIMENSION_MAX_L {
        for (bc, periodic, formula) in [
            (Boundary::Periodic, true, fibonacci(length - 1) + fibonacci(length + 1)),
            (Boundary::Open, false, fibonacci(length + 2)),
        ] {
            let brute = (0u32..1 << length).filter(|&s| blockade_ok(s, length, periodic)).count() as u64;
            let enumerated = ConstrainedBasis::enumerate(length, bc).unwrap().len() as u64;
            if brute != formula || enumerated != formula || expected_dimension(length, bc) != formula {
                bad.push(format!("L={length} {bc}: brute {brute}, enumerated {enumerated}, formula {formula}"));
            }
        }
    }
    let d6 = ConstrainedBasis::enumerate(6, Boundary::Periodic).unwrap().len();
    let elapsed = start.elapsed();
    let pass = bad.is_empty() && d6 == 18 && elapsed < DIMENSION_TIME;
    (pass, format!("L=2..{DIMENSION_MAX_L} both boundaries, D(6, pbc)={d6}, mismatches {bad:?}, {elapsed:.1?} < {DIMENSION_TIME:?}"))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let basis = Arc::new(ConstrainedBasis::enumerate(SECTOR_L, Boundary::Periodic).unwrap());
    let sector = build_sector(basis, 0, Some(Parity::Even)).unwrap();
    let elapsed = start.elapsed();
    let pass = sector.len() == SECTOR_DIMENSION && elapsed < SECTOR_TIME;
    (pass, format!("dimension {} (expected {SECTOR_DIMENSION}), {elapsed:.1?} < {SECTOR_TIME:?}", sector.len()))
}

fn all_sectors(basis: &Arc<ConstrainedBasis>) -> Vec<Block> {
    let length = basis.length();
    let mut blocks = Vec::new();
    for k in 0..length {
        if k == 0 || 2 * k == length {
            for p in [Parity::Even, Parity::Odd] {
                blocks.push(Block::sector(basis.clone(), k, Some(p)).unwrap());
            }
        } else {
            blocks.push(Block::sector(basis.clone(), k, None).unwrap());
        }
    }
    blocks
}

fn criterion_3() -> Check {
    let mut worst = 0.0f64;
    let mut count = 0;
    for length in 3..=REFLECTION_MAX_L {
        let pbc = Arc::new(ConstrainedBasis::enumerate(length, Boundary::Periodic).unwrap());
        let mut blocks = all_sectors(&pbc);
        blocks.push(Block::full(Arc::new(ConstrainedBasis::enumerate(length, Boundary::Open).unwrap())));
        for block in blocks.iter().filter(|b| !b.is_empty()) {
            let s = diagonalize(block, false).unwrap();
            worst = worst.max(s.reflection_defect());
            count += 1;
        }
    }
    (worst <= REFLECTION_TOL, format!("{count} blocks at L=3..{REFLECTION_MAX_L}, max |E_i + E_(D-1-i)| = {worst:.2e} <= {REFLECTION_TOL:e}"))
}

/// `(den H + num D) v` in integer arithmetic with flips derived directly from
/// the blockade rule on an open chain.
fn integer_residual_is_zero(basis: &ConstrainedBasis, v: &[BigInt], num: i64, den: i64) -> bool {
    let length = basis.length();
    let states = basis.states();
    states.iter().enumerate().all(|(i, &s)| {
        let mut acc = BigInt::zero();
        for site in 0..length {
            let left = site > 0 && (s >> (site - 1)) & 1 == 1;
            let right = site + 1 < length && (s >> (site + 1)) & 1 == 1;
            if !left && !right {
                let j = basis.index_of(s ^ (1 << site)).expect("flip stays in the basis");
                acc += &v[j] * den;
            }
        }
        let d: i64 = (0..length)
            .map(|site| {
                let z = if (s >> site) & 1 == 1 { 1 } else { -1 };
                if site % 2 == 0 { z } else { -z }
            })
            .sum();
        acc += &v[i] * (num * d);
        acc.is_zero()
    })
}

fn criterion_4() -> Check {
    let mut problems = Vec::new();
    let mut vectors_checked = 0;
    for length in 4..=ZERO_MODE_MAX_L {
        let expected = if length % 2 == 0 { fibonacci(length / 2 + 1) } else { fibonacci((length - 1) / 2) } as usize;
        let basis = ConstrainedBasis::enumerate(length, Boundary::Open).unwrap();
        let options = ZeroModeOptions { exact: true, integer_basis: true, stagger: 0.0, skip_numerical: false };
        let plain = zero_modes(length, Boundary::Open, options).unwrap();
        let vectors = plain.integer_kernel_basis.as_ref().unwrap();
        if plain.kernel_dimension_exact != Some(expected) || vectors.len() != expected {
            problems.push(format!("L={length}: exact {:?}, expected {expected}", plain.kernel_dimension_exact));
        }
        for v in vectors {
            vectors_checked += 1;
            if !integer_residual_is_zero(&basis, v, 0, 1) {
                problems.push(format!("L={length}: integer vector not annihilated"));
            }
        }
        if length % 2 == 0 {
            let with_basis = length <= STAGGER_BASIS_MAX_L;
            let options = ZeroModeOptions { exact: true, integer_basis: with_basis, stagger: STAGGER, skip_numerical: false };
            let staggered = zero_modes(length, Boundary::Open, options).unwrap();
            if staggered.kernel_dimension_exact != Some(expected) {
                problems.push(format!("L={length} stagger: exact {:?}", staggered.kernel_dimension_exact));
            }
            let (num, den) = staggered.stagger_fraction;
            for v in staggered.integer_kernel_basis.iter().flatten() {
                vectors_checked += 1;
                if !integer_residual_is_zero(&basis, v, num, den) {
                    problems.push(format!("L={length} stagger: integer vector not annihilated"));
                }
            }
        }
    }
    (
        problems.is_empty(),
        format!(
            "OBC L=4..{ZERO_MODE_MAX_L} exact counts match F(L/2+1) / F((L-1)/2); stagger {STAGGER} keeps even-L counts; \
             {vectors_checked} integer vectors (stagger bases up to L={STAGGER_BASIS_MAX_L}) satisfy Hv=0 exactly; problems {problems:?}"
        ),
    )
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let mut worst_closure = 0.0f64;
    let mut max_err = Vec::new();
    let mut mean_32 = f64::NAN;
    let mut sizes_ok = true;
    for length in (4..=FSA_MAX_L).step_by(2) {
        let r = run_fsa(length, Boundary::Periodic).unwrap();
        sizes_ok &= r.energies.len() == length + 1 && r.vectors.len() == length + 1;
        worst_closure = worst_closure.max(r.closure_norm);
        max_err.push((length, r.max_error()));
        if length == FSA_MAX_L {
            mean_32 = r.mean_error();
        }
    }
    let elapsed = start.elapsed();
    let at = |l: usize| max_err.iter().find(|e| e.0 == l).unwrap().1;
    let pass = sizes_ok
        && worst_closure < FSA_CLOSURE_TOL
        && (FSA_MEAN_ERR.0..=FSA_MEAN_ERR.1).contains(&mean_32)
        && at(32) <= at(24)
        && elapsed < FSA_TIME;
    (
        pass,
        format!(
            "closure after L steps, max norm {worst_closure:.1e} < {FSA_CLOSURE_TOL:e}; mean err(L=32) = {:.3}% in [{}%, {}%]; \
             max err L=24 {:.3}% >= L=32 {:.3}%; {elapsed:.1?} < {FSA_TIME:?}",
            100.0 * mean_32,
            100.0 * FSA_MEAN_ERR.0,
            100.0 * FSA_MEAN_ERR.1,
            100.0 * at(24),
            100.0 * at(32)
        ),
    )
}

fn criterion_6() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for length in [20, 24] {
        let a = analyze_band(length).unwrap();
        let band = &a.band;
        let omega_ok = ((band.omega - OMEGA) / OMEGA).abs() <= OMEGA_REL_TOL;
        let fsa_ok = length != 24 || band.fsa_relative_error <= BAND_FSA_REL_TOL;
        pass &= band.members.len() == length + 1 && omega_ok && fsa_ok;
        parts.push(format!(
            "L={length}: {} members (expected {}), Omega {:.4}, FSA |dE/E| {:.2}%",
            band.members.len(),
            length + 1,
            band.omega,
            100.0 * band.fsa_relative_error
        ));
    }
    (pass, format!("{}; Omega within {}% of {OMEGA}, |dE/E| <= {}% at L=24", parts.join("; "), 100.0 * OMEGA_REL_TOL, 100.0 * BAND_FSA_REL_TOL))
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let length = 20;
    let grid = TimeGrid::new(0.0, 30.0, 0.05).unwrap();
    let pbc = Arc::new(ConstrainedBasis::enumerate(length, Boundary::Periodic).unwrap());
    let z2 = product_state(Pattern::Z2, length, Boundary::Periodic).unwrap();
    let options = QuenchOptions { method: Method::Spectral, ..QuenchOptions::default() };
    let run = evolve(&pbc, z2, &grid, &options).unwrap();
    let a = oscillation_analysis(&run, &AnalysisOptions::default()).unwrap();
    let pc = a.period_correlator.unwrap_or(f64::NAN);
    let pr = a.period_entropy_residual.unwrap_or(f64::NAN);

    // The vacuum control runs on an open chain: on a ring of 20 sites the
    // finite size produces a wrap-around recurrence.
    let obc = Arc::new(ConstrainedBasis::enumerate(length, Boundary::Open).unwrap());
    let zero = product_state(Pattern::Vacuum, length, Boundary::Open).unwrap();
    let vac = evolve(&obc, zero, &grid, &QuenchOptions::default()).unwrap();
    let revival = vac.times.iter().zip(&vac.fidelity).filter(|(t, _)| **t >= 5.0).map(|(_, f)| *f).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let pass = (pc - PERIOD).abs() <= PERIOD_TOL
        && ((pr - pc) / pc).abs() <= RESIDUAL_PERIOD_REL_TOL
        && revival <= REVIVAL_THRESHOLD
        && elapsed < DYNAMICS_TIME;
    (
        pass,
        format!(
            "L=20 Z2 correlator period {pc:.4} (target {PERIOD} +- {PERIOD_TOL}), entropy-residual period {pr:.4} \
             (within {}%); vacuum (open chain) max fidelity on [5, 30] = {revival:.4} <= {REVIVAL_THRESHOLD}; {elapsed:.1?} < {DYNAMICS_TIME:?}",
            100.0 * RESIDUAL_PERIOD_REL_TOL
        ),
    )
}

fn criterion_8() -> Check {
    let basis = Arc::new(ConstrainedBasis::enumerate(SLOPE_L, Boundary::Periodic).unwrap());
    let grid = TimeGrid::new(0.0, SLOPE_WINDOW, 0.1).unwrap();
    let options = QuenchOptions { method: Method::Krylov, ..QuenchOptions::default() };
    let slopes: Vec<(Pattern, f64)> = [Pattern::Z2, Pattern::Period(3), Pattern::Period(4), Pattern::Vacuum]
        .into_iter()
        .map(|p| {
            let run = evolve(&basis, product_state(p, SLOPE_L, Boundary::Periodic).unwrap(), &grid, &options).unwrap();
            (p, linear_fit(&run.times, &run.entropy).unwrap().slope)
        })
        .collect();
    let z2 = slopes[0].1;
    let pass = slopes[1..].iter().all(|(_, s)| z2 < *s);
    let listed: Vec<String> = slopes.iter().map(|(p, s)| format!("{p} {s:.4}")).collect();
    (pass, format!("L={SLOPE_L} ring, S(t) slopes on [0, {SLOPE_WINDOW}]: {}; Z2 strictly smallest", listed.join(", ")))
}

fn criterion_9() -> Check {
    let run = |length: usize| {
        let basis = Arc::new(ConstrainedBasis::enumerate(length, Boundary::Periodic).unwrap());
        let block = Block::sector(basis, 0, Some(Parity::Even)).unwrap();
        diagonalize(&block, false).map(|s| {
            let stats = level_statistics(&s.eigenvalues, standard_window(s.dim()), DEFAULT_UNFOLD_DEGREE).unwrap();
            (length, s.dim(), stats)
        })
    };
    let (length, dim, s) = run(LEVEL_L).or_else(|_| run(LEVEL_FALLBACK_L)).unwrap();
    let hamiltonian_ok = s.ks_poisson > s.ks_semipoisson && s.ks_poisson > s.ks_wd;
    let poisson = poisson_control(4000, DEFAULT_UNFOLD_DEGREE, 7).unwrap();
    let goe = goe_control(200, 20, DEFAULT_UNFOLD_DEGREE, 11).unwrap();
    let controls_ok = poisson.closest() == Reference::Poisson && goe.closest() == Reference::WignerDyson;
    (
        hamiltonian_ok && controls_ok,
        format!(
            "L={length} (k=0, I=+1, D={dim}) window {:?}: KS Poisson {:.4} > SP {:.4} and > WD {:.4}; \
             controls: Poisson -> {:?}, GOE -> {:?}",
            s.window,
            s.ks_poisson,
            s.ks_semipoisson,
            s.ks_wd,
            poisson.closest(),
            goe.closest()
        ),
    )
}

fn criterion_10() -> Check {
    let ratios: Vec<f64> = PR2_LENGTHS
        .iter()
        .map(|&l| {
            let a = analyze_band(l).unwrap();
            pr2_enhancement(&a.scatter, &a.band, 0).unwrap().ratio
        })
        .collect();
    let pass = ratios.iter().all(|&r| r > 1.0) && ratios.windows(2).all(|w| w[1] >= w[0]);
    let listed: Vec<String> = PR2_LENGTHS.iter().zip(&ratios).map(|(l, r)| format!("L={l} {r:.3}")).collect();
    (pass, format!("band / mid-spectrum PR2 in (k=0, I=+1): {}; all > 1 and nondecreasing", listed.join(", ")))
}

/// Entanglement across the middle bond from the unconstrained `2^L`
/// coefficient matrix.
fn oracle_entropy(basis: &ConstrainedBasis, psi: &[Complex64]) -> f64 {
    let length = basis.length();
    let h = length / 2;
    let (rows, cols) = (1usize << h, 1usize << (length - h));
    let mut m = vec![Complex64::zero(); rows * cols];
    for (&s, &a) in basis.states().iter().zip(psi) {
        let s = s as usize;
        m[(s & (rows - 1)) * cols + (s >> h)] = a;
    }
    let mut rho = vec![Complex64::zero(); rows * rows];
    for i in 0..rows {
        for j in 0..rows {
            rho[j * rows + i] = (0..cols).map(|c| m[i * cols + c] * m[j * cols + c].conj()).sum();
        }
    }
    let p = hermitian_eigh(&mut rho, rows, false).unwrap();
    -p.iter().filter(|&&x| x > 1e-14).map(|x| x * x.ln()).sum::<f64>()
}

fn criterion_11() -> Check {
    let mut worst = [0.0f64; 6];
    let mut problems = Vec::new();
    for &length in &ORACLE_LENGTHS {
        let basis = Arc::new(ConstrainedBasis::enumerate(length, Boundary::Periodic).unwrap());
        let n = basis.len();
        let mut full = assemble_full(&OperatorSpec::pxp(), &basis).unwrap().to_dense();
        let energies = symmetric_eigh(&mut full, n, true).unwrap();
        let col = |j: usize| &full[j * n..(j + 1) * n];
        let z2 = basis.index_of_config(product_state(Pattern::Z2, length, Boundary::Periodic).unwrap()).unwrap();
        let mut e_z2 = vec![Complex64::zero(); n];
        e_z2[z2] = Complex64::new(1.0, 0.0);

        // Energy groups of the full spectrum.
        let mut group = vec![0usize; n];
        for j in 1..n {
            group[j] = group[j - 1] + usize::from(energies[j] - energies[j - 1] > 1e-6);
        }
        let groups = group[n - 1] + 1;
        let group_of = |e: f64| {
            let j = energies.partition_point(|&x| x < e - 1e-6);
            group[j.min(n - 1)]
        };
        let mut full_overlap = vec![0.0; groups];
        for j in 0..n {
            full_overlap[group[j]] += col(j)[z2].powi(2);
        }

        let mut sector_energies = Vec::new();
        let mut sector_overlap = vec![0.0; groups];
        let mut sector_zero = 0;
        for block in all_sectors(&basis).into_iter().filter(|b| !b.is_empty()) {
            let s = diagonalize(&block, true).unwrap();
            let projected = block.project(&e_z2).unwrap();
            for (j, &e) in s.eigenvalues.iter().enumerate() {
                sector_energies.push(e);
                let v = s.vector(j).unwrap();
                let o: Complex64 = v.iter().zip(&projected).map(|(a, b)| a.conj() * b).sum();
                let g = group_of(e);
                sector_overlap[g] += o.norm_sqr();
                sector_zero += usize::from(e.abs() < 1e-8);
                // Nondegenerate levels fix the eigenvector up to a phase.
                let size = group.iter().filter(|&&x| x == g).count();
                if size == 1 {
                    let j_full = group.iter().position(|&x| x == g).unwrap();
                    let embedded = block.embed(&v).unwrap();
                    let pr_sector: f64 = embedded.iter().map(|x| x.norm_sqr().powi(2)).sum();
                    let pr_full: f64 = col(j_full).iter().map(|x| x.powi(4)).sum();
                    worst[2] = worst[2].max((pr_sector - pr_full).abs());
                }
            }
        }
        sector_energies.sort_by(f64::total_cmp);
        if sector_energies.len() != n {
            problems.push(format!("L={length}: sector dimensions sum to {}", sector_energies.len()));
            continue;
        }
        worst[0] = worst[0].max(sector_energies.iter().zip(&energies).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        worst[1] = worst[1].max(full_overlap.iter().zip(&sector_overlap).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));

        let full_zero = energies.iter().filter(|e| e.abs() < 1e-8).count();
        let exact = zero_modes(length, Boundary::Periodic, ZeroModeOptions { exact: true, ..ZeroModeOptions::default() })
            .unwrap()
            .kernel_dimension_exact;
        if sector_zero != full_zero || exact != Some(full_zero) {
            problems.push(format!("L={length}: zero modes sectors {sector_zero}, full {full_zero}, exact {exact:?}"));
        }

        // Dynamics: sector-resolved spectral propagation against the dense
        // full-basis exponential.
        let grid = TimeGrid::new(0.0, 5.0, 0.5).unwrap();
        let options = QuenchOptions { method: Method::Spectral, ..QuenchOptions::default() };
        let run = evolve(&basis, product_state(Pattern::Z2, length, Boundary::Periodic).unwrap(), &grid, &options).unwrap();
        for (i, &t) in run.times.iter().enumerate() {
            let psi: Vec<Complex64> = (0..n)
                .map(|r| (0..n).map(|j| Complex64::from_polar(col(j)[r] * col(j)[z2], -energies[j] * t)).sum())
                .collect();
            let fidelity = psi[z2].norm_sqr();
            let correlator: f64 = basis
                .states()
                .iter()
                .zip(&psi)
                .map(|(&s, a)| a.norm_sqr() * bond_correlator(s, length, Boundary::Periodic))
                .sum();
            worst[3] = worst[3].max((fidelity - run.fidelity[i]).abs());
            worst[4] = worst[4].max((correlator - run.correlator[i]).abs());
            worst[5] = worst[5].max((oracle_entropy(&basis, &psi) - run.entropy[i]).abs());
        }
    }
    let max = worst.iter().cloned().fold(0.0, f64::max);
    (
        problems.is_empty() && max <= ORACLE_TOL,
        format!(
            "rings L={ORACLE_LENGTHS:?}: max deviations energy {:.1e}, Z2 overlap {:.1e}, PR2 {:.1e}, fidelity {:.1e}, \
             correlator {:.1e}, entropy {:.1e} (tol {ORACLE_TOL:e}); zero-mode counts agree; problems {problems:?}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]
        ),
    )
}
