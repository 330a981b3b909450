//! Sweep and scenario configuration, including the `key=value` scenario file.

use std::fmt;
use std::str::FromStr;

use fullpack::{KernelId, Variant, MAX_COLS};

use crate::error::{HarnessError, Result};

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

/// Parses a comma-separated kernel list. `all` expands to the nine vector
/// kernels; `w8a8` is the baseline and `naive_w4a8` the adjacent-pair kernel.
pub fn parse_kernels(list: &str) -> Result<Vec<KernelId>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name.eq_ignore_ascii_case("all") {
            out.extend(KernelId::all_vector());
            continue;
        }
        let id: KernelId = name.parse().map_err(|e| bad(format!("kernel {name:?}: {e}")))?;
        if id.variant() == Variant::FullpackRef {
            return Err(bad(format!("{name} is a reference kernel and is not benchmarked")));
        }
        if id.variant() == Variant::Naive && id != KernelId::naive_w4a8() {
            return Err(bad(format!("only naive_w4a8 is implemented, got {name}")));
        }
        if !out.contains(&id) {
            out.push(id);
        }
    }
    if out.is_empty() {
        return Err(bad("no kernels selected"));
    }
    Ok(out)
}

/// Matrix sizes to sweep: `start:stop:xfactor` builds the full grid of
/// geometric axis values for both rows and cols, otherwise a comma-separated
/// list of `ROWSxCOLS`.
pub fn parse_sizes(spec: &str) -> Result<Vec<(usize, usize)>> {
    let spec = spec.trim();
    if spec.contains(':') {
        let axis = geometric_axis(spec)?;
        return Ok(axis.iter().flat_map(|&r| axis.iter().map(move |&c| (r, c))).collect());
    }
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (r, c) = item.split_once(['x', 'X']).ok_or_else(|| bad(format!("size {item:?} is not ROWSxCOLS")))?;
            Ok((parse_count(r, "rows")?, parse_count(c, "cols")?))
        })
        .collect()
}

fn parse_count(s: &str, what: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| bad(format!("{what} {s:?} is not a count")))
}

/// `128:8192:x2` -> `[128, 256, ..., 8192]`.
pub fn geometric_axis(spec: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, factor] = parts.as_slice() else {
        return Err(bad(format!("axis {spec:?} is not START:STOP:xFACTOR")));
    };
    let start = parse_count(start, "start")?;
    let stop = parse_count(stop, "stop")?;
    let factor = parse_count(factor.trim_start_matches(['x', 'X']), "factor")?;
    if start == 0 || factor < 2 || stop < start {
        return Err(bad(format!("axis {spec:?} needs 0 < start <= stop and factor >= 2")));
    }
    let mut axis = Vec::new();
    let mut value = start;
    while value <= stop {
        axis.push(value);
        value = value.checked_mul(factor).ok_or_else(|| bad("axis overflows"))?;
    }
    Ok(axis)
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub kernels: Vec<KernelId>,
    pub sizes: Vec<(usize, usize)>,
    pub iters: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl SweepConfig {
    /// The 128..8192 (factor 2) grid in both dimensions.
    pub fn default_grid(kernels: Vec<KernelId>) -> Self {
        Self { kernels, sizes: parse_sizes("128:8192:x2").expect("static axis"), iters: 10, warmup: 2, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(bad("iters must be at least 1"));
        }
        if self.kernels.is_empty() {
            return Err(bad("no kernels selected"));
        }
        if self.sizes.is_empty() {
            return Err(bad("no sizes selected"));
        }
        for &(rows, cols) in &self.sizes {
            check_size(rows, cols)?;
            if cols % 2 != 0 && self.kernels.contains(&KernelId::naive_w4a8()) {
                return Err(bad(format!("naive_w4a8 needs an even column count, got {cols}")));
            }
        }
        Ok(())
    }
}

fn check_size(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(bad(format!("size {rows}x{cols} is empty")));
    }
    if cols > MAX_COLS {
        return Err(bad(format!("{cols} columns exceeds the overflow bound {MAX_COLS}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Fc,
    LstmUnrolled,
}

impl FromStr for LayerKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fc" => Ok(LayerKind::Fc),
            "lstm_unrolled" | "lstm" => Ok(LayerKind::LstmUnrolled),
            other => Err(bad(format!("unknown layer kind {other:?}"))),
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerKind::Fc => "fc",
            LayerKind::LstmUnrolled => "lstm_unrolled",
        })
    }
}

/// One layer. `batch` input vectors per step, `repeat` sequential steps.
/// An unrolled LSTM is modelled by its gate GEMV: `rows = 4 * hidden`,
/// `cols = input + hidden`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub rows: usize,
    pub cols: usize,
    pub batch: usize,
    pub repeat: usize,
}

impl LayerSpec {
    /// Single-batch layers run the selected kernel; the rest stay on the
    /// 8-bit baseline.
    pub fn uses_gemv_kernel(&self) -> bool {
        self.batch == 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerScenario {
    pub layers: Vec<LayerSpec>,
    pub iters: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl LayerScenario {
    /// A speech-recognition network: three batch-16 FC layers, one LSTM
    /// unrolled into 16 single-batch steps, two more batch-16 FC layers.
    /// Hidden size 2048; the LSTM gate GEMV is 8192 x 4096.
    pub fn speech_model() -> Self {
        let fc = |name: &str| LayerSpec {
            name: name.into(),
            kind: LayerKind::Fc,
            rows: 2048,
            cols: 2048,
            batch: 16,
            repeat: 1,
        };
        Self {
            layers: vec![
                fc("fc-1"),
                fc("fc-2"),
                fc("fc-3"),
                LayerSpec {
                    name: "lstm".into(),
                    kind: LayerKind::LstmUnrolled,
                    rows: 8192,
                    cols: 4096,
                    batch: 1,
                    repeat: 16,
                },
                fc("fc-5"),
                fc("fc-6"),
            ],
            iters: 5,
            warmup: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(bad("iters must be at least 1"));
        }
        if self.layers.is_empty() {
            return Err(bad("scenario has no layers"));
        }
        for layer in &self.layers {
            check_size(layer.rows, layer.cols)?;
            if layer.batch == 0 || layer.repeat == 0 {
                return Err(bad(format!("layer {}: batch and repeat must be at least 1", layer.name)));
            }
            if layer.kind == LayerKind::LstmUnrolled && layer.batch != 1 {
                return Err(bad(format!("layer {}: unrolled LSTM steps have batch 1", layer.name)));
            }
        }
        Ok(())
    }

    /// Parses the line-oriented scenario format:
    ///
    /// ```text
    /// # comment
    /// iters = 5
    /// warmup = 1
    /// seed = 42
    /// layer name=fc-1 kind=fc rows=2048 cols=2048 batch=16
    /// layer name=lstm kind=lstm_unrolled rows=8192 cols=4096 batch=1 repeat=16
    /// ```
    ///
    /// `batch` and `repeat` default to 1; `name` defaults to `layer-N`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut scenario = Self { layers: Vec::new(), iters: 5, warmup: 1, seed: 0 };
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| bad(format!("line {}: {msg}", number + 1));
            if let Some(rest) = line.strip_prefix("layer") {
                if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
                    return Err(at(format!("unrecognised line {line:?}")));
                }
                scenario.layers.push(parse_layer(rest, scenario.layers.len()).map_err(|e| at(e.to_string()))?);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let number_value =
                || value.parse::<u64>().map_err(|_| at(format!("{key} value {value:?} is not a number")));
            match key {
                "iters" => scenario.iters = number_value()? as usize,
                "warmup" => scenario.warmup = number_value()? as usize,
                "seed" => scenario.seed = number_value()?,
                other => return Err(at(format!("unknown key {other:?}"))),
            }
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

fn parse_layer(fields: &str, index: usize) -> Result<LayerSpec> {
    let mut layer =
        LayerSpec { name: format!("layer-{}", index + 1), kind: LayerKind::Fc, rows: 0, cols: 0, batch: 1, repeat: 1 };
    for field in fields.split_whitespace() {
        let (key, value) =
            field.split_once('=').ok_or_else(|| bad(format!("layer field {field:?} is not key=value")))?;
        match key {
            "name" => layer.name = value.to_string(),
            "kind" => layer.kind = value.parse()?,
            "rows" => layer.rows = parse_count(value, "rows")?,
            "cols" => layer.cols = parse_count(value, "cols")?,
            "batch" => layer.batch = parse_count(value, "batch")?,
            "repeat" => layer.repeat = parse_count(value, "repeat")?,
            other => return Err(bad(format!("unknown layer field {other:?}"))),
        }
    }
    if layer.rows == 0 || layer.cols == 0 {
        return Err(bad(format!("layer {} needs rows and cols", layer.name)));
    }
    Ok(layer)
}

#[cfg(test)]
mod tests {
    use fullpack::BitWidth;

    use super::*;

    #[test]
    fn default_axis_has_seven_points() {
        assert_eq!(geometric_axis("128:8192:x2").unwrap(), [128, 256, 512, 1024, 2048, 4096, 8192]);
        assert_eq!(parse_sizes("128:8192:x2").unwrap().len(), 49);
        assert!(geometric_axis("0:8:x2").is_err());
        assert!(geometric_axis("8:4:x2").is_err());
        assert!(geometric_axis("8:64:x1").is_err());
        assert!(geometric_axis("8:64").is_err());
    }

    #[test]
    fn explicit_sizes() {
        assert_eq!(parse_sizes("128x256, 4x4").unwrap(), [(128, 256), (4, 4)]);
        assert!(parse_sizes("128").is_err());
        assert!(parse_sizes("ax4").is_err());
    }

    #[test]
    fn kernel_lists() {
        assert_eq!(parse_kernels("all").unwrap().len(), 9);
        let ids = parse_kernels("w4a8, w8a8,naive_w4a8,w4a8").unwrap();
        assert_eq!(
            ids,
            [KernelId::vector(BitWidth::Four, BitWidth::Eight).unwrap(), KernelId::baseline(), KernelId::naive_w4a8()]
        );
        assert!(parse_kernels("w4a2").is_err());
        assert!(parse_kernels("ref_w4a8").is_err());
        assert!(parse_kernels("naive_w2a8").is_err());
        assert!(parse_kernels("").is_err());
    }

    #[test]
    fn sweep_validation() {
        let mut cfg = SweepConfig::default_grid(vec![KernelId::baseline()]);
        assert!(cfg.validate().is_ok());
        cfg.iters = 0;
        assert!(cfg.validate().is_err());
        cfg.iters = 1;
        cfg.sizes = vec![(4, MAX_COLS + 1)];
        assert!(cfg.validate().is_err());
        cfg.sizes = vec![(4, 33)];
        cfg.kernels.push(KernelId::naive_w4a8());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scenario_file() {
        let text = "# test\niters = 3\nseed=9\n\nlayer name=a kind=fc rows=64 cols=32 batch=4\nlayer kind=lstm_unrolled rows=128 cols=64 repeat=2 # steps\n";
        let s = LayerScenario::parse(text).unwrap();
        assert_eq!((s.iters, s.warmup, s.seed), (3, 1, 9));
        assert_eq!(s.layers.len(), 2);
        assert_eq!(s.layers[1].name, "layer-2");
        assert_eq!(s.layers[1].kind, LayerKind::LstmUnrolled);
        assert_eq!((s.layers[1].batch, s.layers[1].repeat), (1, 2));
        assert!(s.layers[1].uses_gemv_kernel());
        assert!(!s.layers[0].uses_gemv_kernel());
    }

    #[test]
    fn scenario_file_errors() {
        for text in [
            "iters = x\nlayer rows=1 cols=1",
            "bogus = 1\nlayer rows=1 cols=1",
            "layer rows=1",
            "layer rows=1 cols=1 kind=conv",
            "layer kind=lstm_unrolled rows=8 cols=8 batch=2",
            "layers rows=1 cols=1",
            "iters = 0\nlayer rows=1 cols=1",
            "",
        ] {
            assert!(matches!(LayerScenario::parse(text), Err(HarnessError::Config(_))), "{text:?}");
        }
    }

    #[test]
    fn speech_model_shape() {
        let s = LayerScenario::speech_model();
        assert!(s.validate().is_ok());
        assert_eq!(s.layers.len(), 6);
        assert_eq!(s.layers.iter().filter(|l| l.uses_gemv_kernel()).count(), 1);
    }
}
