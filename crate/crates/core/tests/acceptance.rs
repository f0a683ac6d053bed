//! Acceptance run: checks criteria 1 to 8 in order and prints one
//! PASS/FAIL line for each. Exits nonzero when any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spbench_core::analysis::{
    memory_bytes, operational_intensity, preset, roofline_bound, work_flops, AnalysisParams, Format,
};
use spbench_core::generators::{
    bundled_tensors, kronecker_cell_probabilities, mode_degree_histogram, powerlaw_fit,
    powerlaw_fit_binned, powerlaw_generate, skewed_initiator, GeneratorSpec, KroneckerSpec,
    KroneckerStream, PowerLawSpec,
};
use spbench_core::harness::{emit_report, ReportFormat};
use spbench_core::io::write_tns;
use spbench_core::kernels::oracle;
use spbench_core::kernels::{
    MttkrpCooPlan, MttkrpHicooPlan, TewPlan, TsPlan, TtmCooPlan, TtmGHicooPlan, TtvCooPlan,
    TtvGHicooPlan, DENSE_CAP,
};
use spbench_core::{
    bench, BenchConfig, CooTensor, DenseMatrix, DenseVector, ElementwiseOp, Error, Executor,
    HicooTensor, KernelId, KernelPlan, MttkrpStrategy, Precision, Scalar, StorageBytes,
    TensorSource, ToDense, TsOp, Validate,
};

type Outcome = Result<String, String>;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn random_coo<V: Scalar>(rng: &mut ChaCha8Rng, dims: &[u32], draws: usize) -> CooTensor<V> {
    let entries: Vec<(Vec<u32>, V)> = (0..draws)
        .map(|_| {
            let c = dims.iter().map(|&d| rng.random_range(0..d)).collect();
            (c, V::from_f64(rng.random_range(0.1..1.0)))
        })
        .collect();
    CooTensor::from_entries(dims.to_vec(), entries).expect("random tensor")
}

/// Same coordinates and storage order as `x`, fresh values.
fn with_random_values<V: Scalar>(x: &CooTensor<V>, rng: &mut ChaCha8Rng) -> CooTensor<V> {
    let vals = (0..x.nnz())
        .map(|_| V::from_f64(rng.random_range(0.1..1.0)))
        .collect();
    CooTensor::from_raw_parts_unchecked(
        x.dims().to_vec(),
        x.all_inds().to_vec(),
        vals,
        x.sort_state().clone(),
    )
}

#[derive(Debug, Clone)]
struct Case {
    dims: Vec<u32>,
    nnz: usize,
    rank: usize,
    block_size: u32,
    compressed_mask: u32,
    f64_values: bool,
    seed: u64,
}

fn case_strategy() -> impl Strategy<Value = Case> {
    (3usize..=4)
        .prop_flat_map(|order| {
            (
                prop::collection::vec(1u32..=8, order),
                0usize..=200,
                prop::sample::select(vec![1usize, 2, 4, 16]),
                prop::sample::select(vec![1u32, 2, 4, 8]),
                1u32..(1 << order),
                any::<bool>(),
                any::<u64>(),
            )
        })
        .prop_map(
            |(dims, nnz, rank, block_size, compressed_mask, f64_values, seed)| Case {
                dims,
                nnz,
                rank,
                block_size,
                compressed_mask,
                f64_values,
                seed,
            },
        )
}

fn close(
    label: &str,
    got: spbench_core::Result<impl ToDense>,
    want: spbench_core::Result<spbench_core::DenseTensor>,
    tol: f64,
) -> Result<(), String> {
    match (got, want) {
        (Ok(g), Ok(w)) => {
            let g = g.to_dense(DENSE_CAP).map_err(|e| format!("{label}: {e}"))?;
            oracle::check_close(&g, &w, tol).map_err(|e| format!("{label}: {e}"))
        }
        (Err(Error::DivisionByZero { .. }), Err(Error::DivisionByZero { .. })) => Ok(()),
        (Ok(_), Err(e)) => Err(format!("{label}: kernel succeeded, oracle failed with {e}")),
        (Err(e), _) => Err(format!("{label}: kernel failed with {e}")),
    }
}

fn run_plan<P: KernelPlan>(
    plan: spbench_core::Result<P>,
    exec: &Executor,
) -> spbench_core::Result<P> {
    let mut plan = plan?;
    plan.execute(exec)?;
    Ok(plan)
}

/// Runs every kernel on every format path and mode of one case against the
/// dense oracle.
fn check_case<V: Scalar>(c: &Case, exec: &Executor) -> Result<(), String> {
    let tol = if V::BYTES == 4 { 1e-4 } else { 1e-10 };
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let order = c.dims.len();
    let x: CooTensor<V> = random_coo(&mut rng, &c.dims, c.nnz);
    let other: CooTensor<V> = random_coo(&mut rng, &c.dims, c.nnz);
    let same = with_random_values(&x, &mut rng);
    let comp: Vec<usize> = (0..order)
        .filter(|m| c.compressed_mask >> m & 1 == 1)
        .collect();
    let b = c.block_size;
    let e = |r: spbench_core::Result<HicooTensor<V>>| r.map_err(|e| e.to_string());
    let hx = e(HicooTensor::from_coo(&x, b))?;
    let gx = e(HicooTensor::from_coo_compressed(&x, &comp, b))?;

    let xd = x.to_dense(DENSE_CAP).map_err(|e| e.to_string())?;
    let dense = |t: &CooTensor<V>| t.to_dense(DENSE_CAP).map_err(|e| e.to_string());
    let (od, sd) = (dense(&other)?, dense(&same)?);

    for op in [
        ElementwiseOp::Add,
        ElementwiseOp::Sub,
        ElementwiseOp::Mul,
        ElementwiseOp::Div,
    ] {
        for (yname, y, yd) in [("same", &same, &sd), ("other", &other, &od)] {
            let want = || oracle::tew(&xd, yd, op);
            let got = run_plan(TewPlan::new(&x, y, op), exec).map(|p| p.into_output());
            close(&format!("tew {op:?} coo/{yname}"), got, want(), tol)?;
            for (fname, xs, comp_modes) in [("hicoo", &hx, None), ("ghicoo", &gx, Some(&comp))] {
                let ys = match comp_modes {
                    None => e(HicooTensor::from_coo(y, b))?,
                    Some(cm) => e(HicooTensor::from_coo_compressed(y, cm, b))?,
                };
                let got = run_plan(TewPlan::new_hicoo(xs, &ys, op), exec).map(|p| p.into_output());
                close(&format!("tew {op:?} {fname}/{yname}"), got, want(), tol)?;
            }
        }
    }

    let s = V::from_f64(rng.random_range(0.1..1.0));
    for op in [TsOp::Add, TsOp::Mul] {
        let want = || Ok(oracle::ts(&xd, op, s.to_f64()));
        let got = run_plan(Ok(TsPlan::new(&x, op, s)), exec).map(|p| p.into_output());
        close(&format!("ts {op:?} coo"), got, want(), tol)?;
        for (fname, xs) in [("hicoo", &hx), ("ghicoo", &gx)] {
            let got = run_plan(Ok(TsPlan::new_hicoo(xs, op, s)), exec).map(|p| p.into_output());
            close(&format!("ts {op:?} {fname}"), got, want(), tol)?;
        }
    }

    let factors: Vec<DenseMatrix<V>> = c
        .dims
        .iter()
        .map(|&d| DenseMatrix::random(d as usize, c.rank, &mut rng))
        .collect();
    let refs: Vec<&DenseMatrix<V>> = factors.iter().collect();
    let f64_factors: Vec<DenseMatrix<f64>> = factors.iter().map(|m| m.to_f64()).collect();
    let f64_refs: Vec<&DenseMatrix<f64>> = f64_factors.iter().collect();
    for n in 0..order {
        let v: DenseVector<V> = DenseVector::random(c.dims[n] as usize, &mut rng);
        let u = &factors[n];
        let rest: Vec<usize> = (0..order).filter(|&m| m != n).collect();
        let gn = e(HicooTensor::from_coo_compressed(&x, &rest, b))?;

        let want = || oracle::ttv(&xd, &v.to_f64(), n);
        let got = run_plan(TtvCooPlan::new(&x, &v, n), exec).map(|p| p.into_output());
        close(&format!("ttv mode {n} coo"), got, want(), tol)?;
        let got = run_plan(TtvGHicooPlan::new(&gn, &v, n), exec).map(|p| p.into_output());
        close(&format!("ttv mode {n} hicoo"), got, want(), tol)?;
        let got = run_plan(TtvGHicooPlan::new(&gx, &v, n), exec).map(|p| p.into_output());
        if comp.contains(&n) {
            if !matches!(got, Err(Error::CompressedProductMode { .. })) {
                return Err(format!(
                    "ttv mode {n} ghicoo: expected a compressed-mode error"
                ));
            }
        } else {
            close(&format!("ttv mode {n} ghicoo"), got, want(), tol)?;
        }

        let want = || oracle::ttm(&xd, &u.to_f64(), n);
        let got = run_plan(TtmCooPlan::new(&x, u, n), exec).map(|p| p.into_output());
        close(&format!("ttm mode {n} scoo"), got, want(), tol)?;
        let got = run_plan(TtmGHicooPlan::new(&gn, u, n), exec).map(|p| p.into_output());
        close(&format!("ttm mode {n} shicoo"), got, want(), tol)?;
        let got = run_plan(TtmGHicooPlan::new(&gx, u, n), exec).map(|p| p.into_output());
        if comp.contains(&n) {
            if !matches!(got, Err(Error::CompressedProductMode { .. })) {
                return Err(format!(
                    "ttm mode {n} ghicoo: expected a compressed-mode error"
                ));
            }
        } else {
            close(&format!("ttm mode {n} ghicoo"), got, want(), tol)?;
        }

        let want = oracle::mttkrp(&xd, &f64_refs, n).map_err(|e| e.to_string())?;
        for strategy in [MttkrpStrategy::Atomic, MttkrpStrategy::Privatized] {
            let mut outs = Vec::new();
            let p = run_plan(MttkrpCooPlan::new(&x, &refs, n, strategy), exec);
            outs.push(("coo", p.map(|p| p.into_output())));
            for (fname, xs) in [("hicoo", &hx), ("ghicoo", &gx)] {
                let p = run_plan(MttkrpHicooPlan::new(xs, &refs, n, strategy), exec);
                outs.push((fname, p.map(|p| p.into_output())));
            }
            for (fname, got) in outs {
                let got = got.map_err(|e| format!("mttkrp mode {n} {fname}: {e}"))?;
                let err = oracle::max_rel_error(got.to_f64().data(), want.data());
                if err > tol {
                    return Err(format!(
                        "mttkrp mode {n} {fname} {strategy:?}: relative error {err:e}"
                    ));
                }
            }
        }
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let exec = Executor::new(3).map_err(|e| e.to_string())?;
    let mut r = runner(500);
    let counts = std::cell::Cell::new((0usize, 0usize));
    let result = r.run(&case_strategy(), |c| {
        let res = if c.f64_values {
            counts.set((counts.get().0, counts.get().1 + 1));
            check_case::<f64>(&c, &exec)
        } else {
            counts.set((counts.get().0 + 1, counts.get().1));
            check_case::<f32>(&c, &exec)
        };
        res.map_err(TestCaseError::fail)
    });
    let secs = start.elapsed().as_secs_f64();
    result.map_err(|e| format!("{e}"))?;
    if secs >= 60.0 {
        return Err(format!("500 cases took {secs:.1} s (limit 60 s)"));
    }
    let (n32, n64) = counts.get();
    Ok(format!(
        "500 cases ({n32} f32, {n64} f64) x all kernels, format paths and modes, {secs:.1} s"
    ))
}

fn criterion_2() -> Outcome {
    let mut r = runner(200);
    let strat = (
        prop::collection::vec(1u32..=300, 2..=5),
        0usize..=400,
        prop::sample::select(vec![1u32, 2, 4, 8, 16, 32, 64, 128, 256]),
        any::<u32>(),
        any::<u64>(),
    );
    r.run(&strat, |(dims, draws, b, mask, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: CooTensor<f32> = random_coo(&mut rng, &dims, draws);
        let n = x.order() as u64;
        prop_assert_eq!(x.storage_bytes(), 4 * (n + 1) * x.nnz() as u64);
        let map = x.to_map();
        let h = HicooTensor::from_coo(&x, b).unwrap();
        prop_assert!(h.validate().is_empty());
        prop_assert_eq!(h.to_coo().to_map(), map.clone());
        let mut comp: Vec<usize> = (0..x.order()).filter(|m| mask >> m & 1 == 1).collect();
        if comp.is_empty() {
            comp.push((mask as usize) % x.order());
        }
        let g = HicooTensor::from_coo_compressed(&x, &comp, b).unwrap();
        prop_assert!(g.validate().is_empty());
        prop_assert_eq!(g.to_coo().to_map(), map);
        Ok(())
    })
    .map_err(|e| format!("{e}"))?;
    Ok("200 tensors: COO->HiCOO->COO and COO->gHiCOO->COO exact, COO bytes = 4(N+1)nnz".into())
}

fn criterion_3() -> Outcome {
    let mut r = runner(100);
    let strat = (
        1u64..1 << 30,
        0u64..1 << 30,
        1u64..=256,
        1u64..1 << 30,
        0u32..=8,
    );
    r.run(&strat, |(nnz, nfibs, rank, nb, bexp)| {
        let nb = nb.min(nnz);
        let p = AnalysisParams::new(nnz)
            .with_nfibs(nfibs)
            .with_rank(rank)
            .with_blocks(nb, 1 << bexp);
        let nnz_b = (nnz + nb / 2) / nb;
        let table_work = [
            (KernelId::Tew, nnz),
            (KernelId::Ts, nnz),
            (KernelId::Ttv, 2 * nnz),
            (KernelId::Ttm, 2 * nnz * rank),
            (KernelId::Mttkrp, 3 * nnz * rank),
        ];
        for (k, w) in table_work {
            prop_assert_eq!(work_flops(k, &p).unwrap(), w);
        }
        let table_bytes = [
            (KernelId::Tew, Format::Coo, 12 * nnz),
            (KernelId::Ts, Format::Coo, 8 * nnz),
            (KernelId::Ttv, Format::Coo, 12 * nnz + 12 * nfibs),
            (
                KernelId::Ttm,
                Format::Coo,
                4 * nnz * rank + 4 * nfibs * rank + 8 * nnz + 8 * nfibs,
            ),
            (KernelId::Mttkrp, Format::Coo, 12 * nnz * rank + 16 * nnz),
            (
                KernelId::Mttkrp,
                Format::Hicoo,
                12 * rank * (nb * nnz_b).min(nnz) + 7 * nnz + 20 * nb,
            ),
        ];
        for (k, f, bytes) in table_bytes {
            prop_assert_eq!(memory_bytes(k, f, &p).unwrap(), bytes);
        }
        prop_assert_eq!(
            operational_intensity(KernelId::Tew, Format::Coo, &p).unwrap(),
            1.0 / 12.0
        );
        prop_assert_eq!(
            operational_intensity(KernelId::Ts, Format::Coo, &p).unwrap(),
            1.0 / 8.0
        );
        let sparse_fibs = p.with_nfibs(nnz / 1000);
        let ttv = operational_intensity(KernelId::Ttv, Format::Coo, &sparse_fibs).unwrap();
        prop_assert!((ttv - 1.0 / 6.0).abs() <= 0.01 / 6.0, "ttv oi {}", ttv);
        Ok(())
    })
    .map_err(|e| format!("{e}"))?;
    Ok("100 parameter sets: work and bytes match the table, OI TEW 1/12, TS 1/8, TTV within 1% of 1/6".into())
}

fn criterion_4() -> Outcome {
    let bluesky = preset("bluesky").map_err(|e| e.to_string())?;
    let dgx = preset("dgx-1v").map_err(|e| e.to_string())?;
    let p = AnalysisParams::new(1_000_000);
    let ts = operational_intensity(KernelId::Ts, Format::Coo, &p).map_err(|e| e.to_string())?;
    let tew = operational_intensity(KernelId::Tew, Format::Coo, &p).map_err(|e| e.to_string())?;
    let (a, b) = (roofline_bound(&bluesky, ts), roofline_bound(&dgx, tew));
    if a != 32.0 || b != 75.0 {
        return Err(format!("Bluesky bound {a}, DGX-1V bound {b}"));
    }
    Ok(format!(
        "Bluesky bound(1/8) = {a}, DGX-1V bound(1/12) = {b}"
    ))
}

fn criterion_5() -> Outcome {
    let spec = PowerLawSpec {
        dims: vec![32768, 32768, 76],
        sparse_modes: vec![0, 1],
        dense_modes: vec![2],
        nnz_target: 1 << 20,
        alpha: 1.1,
        seed: 2024,
    };
    let start = Instant::now();
    let t: CooTensor<f32> = powerlaw_generate(&spec).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let covered: BTreeSet<u32> = t.inds(2).iter().copied().collect();
    let mut detail = format!(
        "power law nnz {} in {secs:.2} s, {} of 76 dense values",
        t.nnz(),
        covered.len()
    );
    let mut problems = Vec::new();
    if secs >= 30.0 {
        problems.push(format!("generation took {secs:.1} s"));
    }
    if covered.len() != 76 {
        problems.push(format!("{} dense values covered", covered.len()));
    }
    for m in [0, 1] {
        let h = mode_degree_histogram(&t, m);
        let raw = powerlaw_fit(&h).map_err(|e| e.to_string())?;
        let binned = powerlaw_fit_binned(&h).map_err(|e| e.to_string())?;
        detail.push_str(&format!(
            "; mode {} binned slope {:.2} r2 {:.3} (raw slope {:.2} r2 {:.3})",
            m + 1,
            binned.slope,
            binned.r2,
            raw.slope,
            raw.r2
        ));
        if !binned.is_power_law() {
            problems.push(format!("mode {} binned fit {binned:?}", m + 1));
        }
    }

    // orthant frequencies of the sampler against the exact Kronecker masses
    let kspec = KroneckerSpec {
        initiator: skewed_initiator(3, 0.9, 0.4),
        iterations: 5,
        target_dims: vec![32; 3],
        sample_count: 200_000,
        seed: 99,
    };
    let probs = kronecker_cell_probabilities(&kspec, 100_000).map_err(|e| e.to_string())?;
    let total: f64 = probs.iter().sum();
    let full: Vec<u64> = kspec.full_dims().iter().map(|&d| d as u64).collect();
    let cells = kspec.initiator.probs.len();
    let mut exact = vec![0.0; cells];
    for (o, &p) in probs.iter().enumerate() {
        let mut coord = vec![0u64; full.len()];
        let mut rem = o as u64;
        for m in (0..full.len()).rev() {
            coord[m] = rem % full[m];
            rem /= full[m];
        }
        exact[kspec.top_cell(&coord)] += p / total;
    }
    let mut counts = vec![0u64; cells];
    for (coord, _) in KroneckerStream::new(&kspec).map_err(|e| e.to_string())? {
        counts[kspec.top_cell(&coord)] += 1;
    }
    let s = kspec.sample_count as f64;
    let mut worst: f64 = 0.0;
    for (c, (&k, &p)) in counts.iter().zip(&exact).enumerate() {
        let sigma = (s * p * (1.0 - p)).sqrt();
        let z = (k as f64 - s * p).abs() / sigma;
        worst = worst.max(z);
        if z > 3.0 {
            problems.push(format!(
                "orthant {c}: {k} draws, expected {:.0} (z {z:.2})",
                s * p
            ));
        }
    }
    detail.push_str(&format!(
        "; Kronecker {} cells, {} orthants, max |z| {worst:.2}",
        probs.len(),
        cells
    ));
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn values_f64<V: Scalar>(v: &[V]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64()).collect()
}

/// Output values of every kernel path at one worker count.
fn all_outputs(
    x: &CooTensor<f32>,
    h: &HicooTensor<f32>,
    ghicoo: &[HicooTensor<f32>],
    vectors: &[DenseVector<f32>],
    factors: &[DenseMatrix<f32>],
    y: &CooTensor<f32>,
    hy: &HicooTensor<f32>,
    exec: &Executor,
) -> spbench_core::Result<Vec<(String, Vec<f64>)>> {
    let mut out = Vec::new();
    let mut p = TewPlan::new(x, y, ElementwiseOp::Add)?;
    p.execute(exec)?;
    out.push(("tew coo".into(), values_f64(p.output().vals())));
    let mut p = TewPlan::new_hicoo(h, hy, ElementwiseOp::Add)?;
    p.execute(exec)?;
    out.push(("tew hicoo".into(), values_f64(p.output().vals())));
    let mut p = TsPlan::new(x, TsOp::Mul, 0.75);
    p.execute(exec)?;
    out.push(("ts coo".into(), values_f64(p.output().vals())));
    let mut p = TsPlan::new_hicoo(h, TsOp::Mul, 0.75);
    p.execute(exec)?;
    out.push(("ts hicoo".into(), values_f64(p.output().vals())));
    let refs: Vec<&DenseMatrix<f32>> = factors.iter().collect();
    for n in 0..x.order() {
        let mut p = TtvCooPlan::new(x, &vectors[n], n)?;
        p.execute(exec)?;
        out.push((format!("ttv coo {n}"), values_f64(p.output().vals())));
        let mut p = TtvGHicooPlan::new(&ghicoo[n], &vectors[n], n)?;
        p.execute(exec)?;
        out.push((format!("ttv hicoo {n}"), values_f64(p.output().vals())));
        let mut p = TtmCooPlan::new(x, &factors[n], n)?;
        p.execute(exec)?;
        out.push((format!("ttm coo {n}"), values_f64(p.output().vals())));
        let mut p = TtmGHicooPlan::new(&ghicoo[n], &factors[n], n)?;
        p.execute(exec)?;
        out.push((format!("ttm hicoo {n}"), values_f64(p.output().vals())));
        let mut p = MttkrpCooPlan::new(x, &refs, n, MttkrpStrategy::Atomic)?;
        p.execute(exec)?;
        out.push((format!("mttkrp coo {n}"), values_f64(p.output().data())));
        let mut p = MttkrpHicooPlan::new(h, &refs, n, MttkrpStrategy::Atomic)?;
        p.execute(exec)?;
        out.push((format!("mttkrp hicoo {n}"), values_f64(p.output().data())));
    }
    Ok(out)
}

fn median_time(
    plan: &mut dyn KernelPlan,
    exec: &Executor,
    reps: usize,
) -> spbench_core::Result<Duration> {
    plan.execute(exec)?;
    let mut t = Vec::with_capacity(reps);
    for _ in 0..reps {
        let s = Instant::now();
        plan.execute(exec)?;
        t.push(s.elapsed());
    }
    t.sort();
    Ok(t[reps / 2])
}

fn criterion_6() -> Outcome {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let max_workers = cores.max(4);
    let spec = PowerLawSpec {
        dims: vec![32768, 32768, 76],
        sparse_modes: vec![0, 1],
        dense_modes: vec![2],
        nnz_target: 1_400_000,
        alpha: 1.1,
        seed: 6,
    };
    let x: CooTensor<f32> = powerlaw_generate(&spec).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let y = with_random_values(&x, &mut rng);
    let h = HicooTensor::from_coo(&x, 128).map_err(|e| e.to_string())?;
    let hy = HicooTensor::from_coo(&y, 128).map_err(|e| e.to_string())?;
    let ghicoo: Vec<HicooTensor<f32>> = (0..3)
        .map(|n| {
            let rest: Vec<usize> = (0..3).filter(|&m| m != n).collect();
            HicooTensor::from_coo_compressed(&x, &rest, 128)
        })
        .collect::<spbench_core::Result<_>>()
        .map_err(|e| e.to_string())?;
    let vectors: Vec<DenseVector<f32>> = x
        .dims()
        .iter()
        .map(|&d| DenseVector::random(d as usize, &mut rng))
        .collect();
    let factors: Vec<DenseMatrix<f32>> = x
        .dims()
        .iter()
        .map(|&d| DenseMatrix::random(d as usize, 16, &mut rng))
        .collect();
    let one = Executor::new(1).map_err(|e| e.to_string())?;
    let many = Executor::new(max_workers).map_err(|e| e.to_string())?;
    let a = all_outputs(&x, &h, &ghicoo, &vectors, &factors, &y, &hy, &one)
        .map_err(|e| e.to_string())?;
    let b = all_outputs(&x, &h, &ghicoo, &vectors, &factors, &y, &hy, &many)
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for ((name, va), (_, vb)) in a.iter().zip(&b) {
        if va.len() != vb.len() {
            return Err(format!(
                "{name}: output lengths {} vs {}",
                va.len(),
                vb.len()
            ));
        }
        let err = oracle::max_rel_error(vb, va);
        if err > 1e-4 {
            return Err(format!(
                "{name}: 1 vs {max_workers} workers differ by {err:e}"
            ));
        }
        worst = worst.max(err);
    }
    let mut detail = format!(
        "nnz {}, {} outputs agree at 1 and {max_workers} workers (max rel {worst:.1e})",
        x.nnz(),
        a.len()
    );
    if cores >= 4 {
        let mut p = TewPlan::new(&x, &y, ElementwiseOp::Add).map_err(|e| e.to_string())?;
        let t1 = median_time(&mut p, &one, 15).map_err(|e| e.to_string())?;
        let tn = median_time(&mut p, &many, 15).map_err(|e| e.to_string())?;
        let speedup = t1.as_secs_f64() / tn.as_secs_f64();
        detail.push_str(&format!("; TEW speedup {speedup:.2}x on {cores} cores"));
        if speedup < 1.5 {
            return Err(detail);
        }
    } else {
        detail.push_str(&format!(
            "; speedup check skipped ({cores} core(s) available, needs 4)"
        ));
    }
    Ok(detail)
}

fn criterion_7() -> Outcome {
    let exec = Executor::new(2).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let p = AnalysisParams::new(123_457).with_rank(16);
    let ratio = work_flops(KernelId::Mttkrp, &p).unwrap() as f64
        / work_flops(KernelId::Ttm, &p).unwrap() as f64;
    if ratio != 1.5 {
        return Err(format!("model MTTKRP/TTM flop ratio {ratio}"));
    }
    for b in bundled_tensors() {
        let x: CooTensor<f32> = b.spec.generate().map_err(|e| e.to_string())?;
        let h = HicooTensor::from_coo(&x, 128).map_err(|e| e.to_string())?;
        let p = AnalysisParams::new(x.nnz() as u64)
            .with_rank(16)
            .with_blocks(h.nblocks() as u64, 128);
        let coo = memory_bytes(KernelId::Mttkrp, Format::Coo, &p).unwrap();
        let hic = memory_bytes(KernelId::Mttkrp, Format::Hicoo, &p).unwrap();
        if hic > coo {
            return Err(format!("{}: HiCOO MTTKRP bytes {hic} > COO {coo}", b.name));
        }
        if x.order() == 3 {
            let u = DenseMatrix::<f32>::from_fn(x.dims()[0] as usize, 16, |_, _| 1.0);
            let mut ttm = TtmCooPlan::new(&x, &u, 0).map_err(|e| e.to_string())?;
            let ft = ttm.execute(&exec).map_err(|e| e.to_string())?;
            let fs: Vec<DenseMatrix<f32>> = x
                .dims()
                .iter()
                .map(|&d| DenseMatrix::from_fn(d as usize, 16, |_, _| 1.0))
                .collect();
            let refs: Vec<&DenseMatrix<f32>> = fs.iter().collect();
            let mut m = MttkrpCooPlan::new(&x, &refs, 0, MttkrpStrategy::Atomic)
                .map_err(|e| e.to_string())?;
            let fm = m.execute(&exec).map_err(|e| e.to_string())?;
            if fm * 2 != ft * 3 {
                return Err(format!("{}: counted MTTKRP {fm} vs TTM {ft} flops", b.name));
            }
        }
        lines.push(format!("{} {:.3}", b.name, hic as f64 / coo as f64));
    }
    Ok(format!(
        "MTTKRP/TTM flops = 1.5 (model and counters); HiCOO/COO MTTKRP bytes at R=16: {}",
        lines.join(", ")
    ))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let specs = [
        (
            "e2e-kron3",
            GeneratorSpec::Kronecker(KroneckerSpec {
                initiator: skewed_initiator(3, 0.95, 0.55),
                iterations: 9,
                target_dims: vec![400; 3],
                sample_count: 20_000,
                seed: 81,
            }),
        ),
        (
            "e2e-pl3",
            GeneratorSpec::PowerLaw(PowerLawSpec {
                dims: vec![2048, 2048, 40],
                sparse_modes: vec![0, 1],
                dense_modes: vec![2],
                nnz_target: 20_000,
                alpha: 1.2,
                seed: 82,
            }),
        ),
        (
            "e2e-pl4",
            GeneratorSpec::PowerLaw(PowerLawSpec {
                dims: vec![1024, 1024, 1024, 30],
                sparse_modes: vec![0, 1, 2],
                dense_modes: vec![3],
                nnz_target: 20_000,
                alpha: 1.2,
                seed: 83,
            }),
        ),
    ];
    let mut tensors = Vec::new();
    for (name, spec) in &specs {
        let t: CooTensor<f32> = spec.generate().map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("{name}.tns"));
        write_tns(&t, &path).map_err(|e| e.to_string())?;
        tensors.push(TensorSource::File(path));
    }
    let config = BenchConfig {
        tensors,
        formats: vec![Format::Coo, Format::Hicoo],
        repetitions: 3,
        precision: Precision::F32,
        ..Default::default()
    };
    let result = bench(&config).map_err(|e| e.to_string())?;
    let csv_path = dir.path().join("report.csv");
    emit_report(&result, ReportFormat::Csv, &csv_path).map_err(|e| e.to_string())?;
    let mut rd = csv::Reader::from_path(&csv_path).map_err(|e| e.to_string())?;
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / b.abs() };
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        if !rec[13].is_empty() {
            return Err(format!(
                "{}/{}/{} failed: {}",
                &rec[0], &rec[1], &rec[2], &rec[13]
            ));
        }
        let f = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| format!("column {i}: {e}"))
        };
        let (flops, bytes, oi, gflops, bound, eff) = (f(4)?, f(5)?, f(6)?, f(7)?, f(8)?, f(9)?);
        if rel(oi, flops / bytes) > 1e-12 || rel(eff, gflops / bound) > 1e-12 {
            return Err(format!("row {rows} breaks oi or efficiency: {rec:?}"));
        }
        rows += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    if rows != 30 {
        return Err(format!("expected 30 rows, found {rows}"));
    }
    if secs >= 300.0 {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!(
        "3 tensors, {rows} CSV rows satisfy oi and efficiency identities, {secs:.1} s"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle equivalence", criterion_1),
        ("format round trip", criterion_2),
        ("analysis table fidelity", criterion_3),
        ("roofline arithmetic", criterion_4),
        ("generators", criterion_5),
        ("parallel consistency", criterion_6),
        ("structural claims", criterion_7),
        ("end to end", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
