//! Timed sweeps and layer scenarios.
//!
//! Every timed configuration is first run once and compared against the
//! scalar reference; a mismatch aborts with [`HarnessError::Verification`]
//! so no number from an incorrect kernel reaches a report.

use std::collections::HashMap;
use std::hint::black_box;
use std::time::Instant;

use fullpack::packing::packed_len;
use fullpack::{
    gemv_baseline_w8a8, gemv_naive_w4a8, gemv_ref, AdjacentPackedW4, Backend, BitWidth, GemvProblem, KernelId,
    SubByteTensor, Variant,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{LayerScenario, SweepConfig};
use crate::error::{HarnessError, Result};
use crate::report::{BenchReport, BenchRow, BASELINE_NOTE};

/// Executes kernels on a chosen backend.
///
/// A runner can be told to corrupt one kernel's output, which is how the
/// verification path is exercised end to end.
#[derive(Debug, Clone)]
pub struct Runner {
    backend: Backend,
    fault: Option<KernelId>,
}

impl Runner {
    pub fn new(prefer_hw: bool) -> Self {
        Self { backend: Backend::select(prefer_hw), fault: None }
    }

    /// Adds one to the first output element of every run of `kernel`.
    pub fn with_fault(mut self, kernel: KernelId) -> Self {
        self.fault = Some(kernel);
        self
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn portable(&self) -> Self {
        Self { backend: Backend::Portable, fault: self.fault }
    }
}

enum Workload {
    Problem(GemvProblem),
    Naive { weights: AdjacentPackedW4, acts: Vec<i8> },
}

/// A generated GEMV instance for one kernel, with its reference output.
pub struct Case {
    id: KernelId,
    rows: usize,
    cols: usize,
    workload: Workload,
    expected: Vec<i32>,
}

/// Uniform random tensor: the top `bits` of a random byte, sign-extended.
pub fn random_tensor(rng: &mut impl RngCore, bits: BitWidth, rows: usize, cols: usize) -> SubByteTensor {
    let mut bytes = vec![0u8; rows * cols];
    rng.fill_bytes(&mut bytes);
    let shift = 8 - bits.bits();
    let values = bytes.into_iter().map(|b| (b as i8) >> shift).collect();
    SubByteTensor::new(bits, rows, cols, values).expect("sign-extended fields are in range")
}

/// Stable per-case seed so that every (kernel, size) gets its own stream.
fn case_seed(seed: u64, id: &KernelId, rows: usize, cols: usize) -> u64 {
    let tag = id.to_string().bytes().fold(0u64, |h, b| h.wrapping_mul(0x100_0000_01b3).wrapping_add(b as u64));
    let mut z = seed ^ tag.rotate_left(17) ^ (rows as u64).rotate_left(32) ^ cols as u64;
    // splitmix64 finaliser
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Case {
    pub fn generate(id: KernelId, rows: usize, cols: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, &id, rows, cols));
        Self::with_rng(id, rows, cols, &mut rng)
    }

    pub fn with_rng(id: KernelId, rows: usize, cols: usize, rng: &mut impl RngCore) -> Result<Self> {
        let w = random_tensor(rng, id.weight_bits(), rows, cols);
        let a = random_tensor(rng, id.act_bits(), 1, cols);
        let (workload, expected) = match id.variant() {
            Variant::BaselineW8A8 => {
                let expected = gemv_baseline_w8a8(w.values(), rows, cols, a.values())?;
                (Workload::Problem(GemvProblem::new(&w, &a)?), expected)
            }
            Variant::FullpackVec | Variant::FullpackRef => {
                let problem = GemvProblem::new(&w, &a)?;
                let expected = gemv_ref(&id.with_variant(Variant::FullpackRef)?, &problem)?;
                (Workload::Problem(problem), expected)
            }
            Variant::Naive => {
                let reference = GemvProblem::new(&w, &a)?;
                let expected = gemv_ref(&KernelId::reference(BitWidth::Four, BitWidth::Eight)?, &reference)?;
                let weights = AdjacentPackedW4::pack(&w)?;
                (Workload::Naive { weights, acts: a.into_values() }, expected)
            }
        };
        Ok(Self { id, rows, cols, workload, expected })
    }

    pub fn id(&self) -> KernelId {
        self.id
    }

    pub fn expected(&self) -> &[i32] {
        &self.expected
    }

    pub fn run(&self, runner: &Runner) -> Result<Vec<i32>> {
        let mut out = match &self.workload {
            Workload::Problem(p) => match self.id.variant() {
                Variant::FullpackRef => gemv_ref(&self.id, p)?,
                _ => runner.backend.gemv(p),
            },
            Workload::Naive { weights, acts } => gemv_naive_w4a8(weights, acts)?,
        };
        if runner.fault == Some(self.id) {
            if let Some(first) = out.first_mut() {
                *first = first.wrapping_add(1);
            }
        }
        Ok(out)
    }

    pub fn verify(&self, runner: &Runner) -> Result<()> {
        if self.run(runner)? != self.expected {
            return Err(HarnessError::Verification { kernel: self.id, rows: self.rows, cols: self.cols });
        }
        Ok(())
    }

    /// Median wall time of one kernel call.
    pub fn time(&self, runner: &Runner, warmup: usize, iters: usize) -> Result<u64> {
        self.time_repeated(runner, warmup, iters, 1)
    }

    /// Median wall time of `calls` back-to-back kernel calls.
    pub fn time_repeated(&self, runner: &Runner, warmup: usize, iters: usize, calls: usize) -> Result<u64> {
        let step = || -> Result<()> {
            for _ in 0..calls {
                black_box(self.run(runner)?);
            }
            Ok(())
        };
        for _ in 0..warmup {
            step()?;
        }
        let mut samples = Vec::with_capacity(iters);
        for _ in 0..iters {
            let start = Instant::now();
            step()?;
            samples.push(start.elapsed().as_nanos() as u64);
        }
        Ok(median(&mut samples))
    }

    /// Weight bytes in this kernel's storage.
    pub fn packed_weight_bytes(&self) -> u64 {
        weight_footprint(&self.id, self.rows, self.cols)
    }
}

/// Bytes of weight storage for `id`: the packed layout for sub-byte weights,
/// two per byte for the naive kernel, one per byte otherwise.
pub fn weight_footprint(id: &KernelId, rows: usize, cols: usize) -> u64 {
    let bytes = match (id.variant(), id.weight_bits()) {
        (Variant::Naive, _) => rows * cols.div_ceil(2),
        (_, BitWidth::Eight) => rows * cols,
        (_, bits) => packed_len(bits, rows, cols),
    };
    bytes as u64
}

fn median(samples: &mut [u64]) -> u64 {
    samples.sort_unstable();
    let n = samples.len();
    match n {
        0 => 0,
        _ if n % 2 == 1 => samples[n / 2],
        _ => (samples[n / 2 - 1] + samples[n / 2]) / 2,
    }
}

/// Times every (kernel, size) pair of `cfg` against the 8-bit baseline.
pub fn run_sweep(cfg: &SweepConfig, runner: &Runner) -> Result<BenchReport> {
    cfg.validate()?;
    let baseline = KernelId::baseline();

    let mut baseline_ns = HashMap::new();
    for &(rows, cols) in &cfg.sizes {
        if baseline_ns.contains_key(&(rows, cols)) {
            continue;
        }
        let case = Case::generate(baseline, rows, cols, cfg.seed)?;
        case.verify(runner)?;
        baseline_ns.insert((rows, cols), case.time(runner, cfg.warmup, cfg.iters)?);
    }

    let mut report = BenchReport { notes: vec![BASELINE_NOTE.into(), backend_note(runner)], rows: Vec::new() };
    for id in &cfg.kernels {
        for &(rows, cols) in &cfg.sizes {
            let base = baseline_ns[&(rows, cols)];
            let median_ns = if *id == baseline {
                base
            } else {
                let case = Case::generate(*id, rows, cols, cfg.seed)?;
                case.verify(runner)?;
                case.time(runner, cfg.warmup, cfg.iters)?
            };
            report.rows.push(BenchRow {
                kernel: id.to_string(),
                rows,
                cols,
                median_ns,
                baseline_ns: base,
                speedup: BenchRow::speedup_of(base, median_ns),
                packed_weight_bytes: weight_footprint(id, rows, cols),
                plain_weight_bytes: (rows * cols) as u64,
                verified: true,
            });
        }
    }
    Ok(report)
}

fn backend_note(runner: &Runner) -> String {
    format!("backend: {}", runner.backend().name())
}

/// Runs each layer of `scenario` with `kernel` on single-batch layers and the
/// baseline elsewhere. Emits one row per layer, labelled `layer:kernel`, and a
/// `total:kernel` row summing them.
pub fn run_scenario(scenario: &LayerScenario, kernel: KernelId, runner: &Runner) -> Result<BenchReport> {
    scenario.validate()?;
    let baseline = KernelId::baseline();
    let mut report = BenchReport {
        notes: vec![BASELINE_NOTE.into(), backend_note(runner), "total row is the sum of layer medians".into()],
        rows: Vec::new(),
    };
    let mut total = BenchRow {
        kernel: format!("total:{kernel}"),
        rows: 0,
        cols: 0,
        median_ns: 0,
        baseline_ns: 0,
        speedup: 0.0,
        packed_weight_bytes: 0,
        plain_weight_bytes: 0,
        verified: true,
    };

    for layer in &scenario.layers {
        let calls = layer.batch * layer.repeat;
        let base_case = Case::generate(baseline, layer.rows, layer.cols, scenario.seed)?;
        base_case.verify(runner)?;
        let base_ns = base_case.time_repeated(runner, scenario.warmup, scenario.iters, calls)?;

        let applied = if layer.uses_gemv_kernel() { kernel } else { baseline };
        let median_ns = if applied == baseline {
            base_ns
        } else {
            let case = Case::generate(applied, layer.rows, layer.cols, scenario.seed)?;
            case.verify(runner)?;
            case.time_repeated(runner, scenario.warmup, scenario.iters, calls)?
        };

        let row = BenchRow {
            kernel: format!("{}:{applied}", layer.name),
            rows: layer.rows,
            cols: layer.cols,
            median_ns,
            baseline_ns: base_ns,
            speedup: BenchRow::speedup_of(base_ns, median_ns),
            packed_weight_bytes: weight_footprint(&applied, layer.rows, layer.cols),
            plain_weight_bytes: (layer.rows * layer.cols) as u64,
            verified: true,
        };
        total.median_ns += row.median_ns;
        total.baseline_ns += row.baseline_ns;
        total.packed_weight_bytes += row.packed_weight_bytes;
        total.plain_weight_bytes += row.plain_weight_bytes;
        report.rows.push(row);
    }
    total.speedup = BenchRow::speedup_of(total.baseline_ns, total.median_ns);
    report.rows.push(total);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{LayerKind, LayerSpec};

    fn w4a8() -> KernelId {
        KernelId::vector(BitWidth::Four, BitWidth::Eight).unwrap()
    }

    fn small_cfg(kernels: Vec<KernelId>) -> SweepConfig {
        SweepConfig { kernels, sizes: vec![(128, 128)], iters: 1, warmup: 0, seed: 5 }
    }

    #[test]
    fn one_point_sweep_structure() {
        let mut kernels = KernelId::all_vector();
        kernels.push(KernelId::baseline());
        kernels.push(KernelId::naive_w4a8());
        let report = run_sweep(&small_cfg(kernels.clone()), &Runner::new(true)).unwrap();
        assert_eq!(report.rows.len(), kernels.len());
        for row in &report.rows {
            assert!(row.verified);
            assert!(row.speedup > 0.0);
            assert_eq!(row.plain_weight_bytes, 128 * 128);
        }
        let baseline = report.rows_for("w8a8").next().unwrap();
        assert_eq!(baseline.speedup, 1.0);
        assert_eq!(report.rows_for("w1a1").next().unwrap().packed_weight_bytes, 128 * 128 / 8);
        assert_eq!(report.rows_for("naive_w4a8").next().unwrap().packed_weight_bytes, 128 * 128 / 2);
    }

    #[test]
    fn footprint_formula() {
        assert_eq!(weight_footprint(&w4a8(), 2048, 2048), 2_097_152);
        assert_eq!(weight_footprint(&KernelId::vector(BitWidth::Eight, BitWidth::Two).unwrap(), 10, 10), 100);
        assert_eq!(weight_footprint(&KernelId::vector(BitWidth::Two, BitWidth::Eight).unwrap(), 1, 65), 32);
    }

    #[test]
    fn injected_fault_is_caught() {
        let runner = Runner::new(true).with_fault(w4a8());
        let err = run_sweep(&small_cfg(vec![w4a8()]), &runner).unwrap_err();
        assert!(matches!(err, HarnessError::Verification { rows: 128, cols: 128, .. }));
        assert_eq!(err.exit_code(), 2);

        let baseline_fault = Runner::new(false).with_fault(KernelId::baseline());
        assert!(run_sweep(&small_cfg(vec![w4a8()]), &baseline_fault).is_err());
    }

    #[test]
    fn non_timing_columns_are_deterministic() {
        let cfg = SweepConfig { sizes: vec![(64, 96), (32, 256)], ..small_cfg(vec![w4a8(), KernelId::baseline()]) };
        let strip = |r: BenchReport| -> Vec<(String, usize, usize, u64, u64)> {
            r.rows
                .into_iter()
                .map(|r| (r.kernel, r.rows, r.cols, r.packed_weight_bytes, r.plain_weight_bytes))
                .collect()
        };
        let a = strip(run_sweep(&cfg, &Runner::new(true)).unwrap());
        let b = strip(run_sweep(&cfg, &Runner::new(false)).unwrap());
        assert_eq!(a, b);
        let x = Case::generate(w4a8(), 16, 64, 3).unwrap();
        let y = Case::generate(w4a8(), 16, 64, 3).unwrap();
        assert_eq!(x.expected(), y.expected());
    }

    #[test]
    fn odd_sample_count_median() {
        assert_eq!(median(&mut [5, 1, 3]), 3);
        assert_eq!(median(&mut [4, 1, 3, 2]), 2);
    }

    fn scaled_speech_model() -> LayerScenario {
        let mut s = LayerScenario::speech_model();
        for layer in &mut s.layers {
            layer.rows /= 16;
            layer.cols /= 16;
        }
        s.iters = 1;
        s.warmup = 0;
        s
    }

    #[test]
    fn scenario_rows() {
        let kernel = KernelId::vector(BitWidth::Four, BitWidth::Four).unwrap();
        let report = run_scenario(&scaled_speech_model(), kernel, &Runner::new(true)).unwrap();
        assert_eq!(report.rows.len(), 7);
        let names: Vec<&str> = report.rows.iter().map(|r| r.kernel.as_str()).collect();
        assert_eq!(names, ["fc-1:w8a8", "fc-2:w8a8", "fc-3:w8a8", "lstm:w4a4", "fc-5:w8a8", "fc-6:w8a8", "total:w4a4"]);
        let total = report.rows.last().unwrap();
        let layers = &report.rows[..6];
        assert_eq!(total.median_ns, layers.iter().map(|r| r.median_ns).sum::<u64>());
        assert_eq!(total.packed_weight_bytes, layers.iter().map(|r| r.packed_weight_bytes).sum::<u64>());
        assert_eq!(report.rows[3].packed_weight_bytes, report.rows[3].plain_weight_bytes / 2);
    }

    #[test]
    fn all_baseline_scenario_total_matches_layer_sum() {
        let report = run_scenario(&scaled_speech_model(), KernelId::baseline(), &Runner::new(true)).unwrap();
        let (total, layers) = report.rows.split_last().unwrap();
        let sum: u64 = layers.iter().map(|r| r.baseline_ns).sum();
        assert!((total.median_ns as f64 - sum as f64).abs() <= 0.05 * sum as f64);
        assert!(layers.iter().all(|r| r.speedup == 1.0));
    }

    #[test]
    fn single_fc_scenario_matches_one_point_sweep() {
        let s = LayerScenario {
            layers: vec![LayerSpec {
                name: "fc".into(),
                kind: LayerKind::Fc,
                rows: 96,
                cols: 160,
                batch: 1,
                repeat: 1,
            }],
            iters: 1,
            warmup: 0,
            seed: 1,
        };
        let id = KernelId::vector(BitWidth::Two, BitWidth::Eight).unwrap();
        let scenario = run_scenario(&s, id, &Runner::new(true)).unwrap();
        let sweep =
            run_sweep(&SweepConfig { sizes: vec![(96, 160)], ..small_cfg(vec![id]) }, &Runner::new(true)).unwrap();
        let (a, b) = (&scenario.rows[0], &sweep.rows[0]);
        assert_eq!(
            (a.rows, a.cols, a.packed_weight_bytes, a.plain_weight_bytes),
            (b.rows, b.cols, b.packed_weight_bytes, b.plain_weight_bytes)
        );
        assert_eq!(a.kernel, format!("fc:{}", b.kernel));
    }

    #[test]
    fn scenario_fault_is_caught() {
        let kernel = KernelId::vector(BitWidth::One, BitWidth::One).unwrap();
        let runner = Runner::new(true).with_fault(kernel);
        assert!(matches!(
            run_scenario(&scaled_speech_model(), kernel, &runner),
            Err(HarnessError::Verification { .. })
        ));
    }
}
