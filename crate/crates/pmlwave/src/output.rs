//! Run outputs: energy CSV, raw field snapshots and reflection reports.
//!
//! Snapshots are one little-endian `f64` file per displacement component,
//! x index fastest, with a `key = value` text sidecar giving dims, spacing,
//! step and time.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use pmlwave_core::diagnostics::{EnergyTrace, ReflectionReport};
use pmlwave_core::grid::{FieldState, GridSpec};
use pmlwave_core::scenario::RunObserver;

pub const ENERGY_FILE: &str = "energy.csv";
pub const ENERGY_HEADER: &str = "t,kinetic,potential,total";
pub const REFLECTION_FILE: &str = "reflection.txt";

/// Writes energy samples and snapshots into a directory as a run proceeds.
/// The first IO error is kept and later writes are skipped.
pub struct OutputSink {
    dir: PathBuf,
    energy: Option<BufWriter<File>>,
    snapshots: Vec<PathBuf>,
    error: Option<io::Error>,
}

impl OutputSink {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let mut energy = BufWriter::new(File::create(dir.join(ENERGY_FILE))?);
        writeln!(energy, "{ENERGY_HEADER}")?;
        Ok(Self { dir: dir.into(), energy: Some(energy), snapshots: Vec::new(), error: None })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Sidecar paths of the snapshots written so far.
    pub fn snapshots(&self) -> &[PathBuf] {
        &self.snapshots
    }

    fn record(&mut self, r: io::Result<()>) {
        if let Err(e) = r {
            self.error.get_or_insert(e);
        }
    }

    pub fn finish(mut self) -> io::Result<Vec<PathBuf>> {
        if let Some(mut w) = self.energy.take() {
            let r = w.flush();
            self.record(r);
        }
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.snapshots),
        }
    }
}

impl RunObserver for OutputSink {
    fn energy(&mut self, t: f64, kinetic: f64, potential: f64) {
        if self.error.is_some() {
            return;
        }
        if let Some(w) = self.energy.as_mut() {
            let r = writeln!(w, "{t:e},{kinetic:e},{potential:e},{:e}", kinetic + potential);
            self.record(r);
        }
    }

    fn snapshot(&mut self, step: u64, t: f64, grid: &GridSpec, state: &FieldState) {
        if self.error.is_some() {
            return;
        }
        match write_snapshot(&self.dir, step, t, grid, state) {
            Ok(path) => self.snapshots.push(path),
            Err(e) => self.error = Some(e),
        }
    }
}

pub fn write_energy_csv(path: &Path, trace: &EnergyTrace) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{ENERGY_HEADER}")?;
    for i in 0..trace.len() {
        writeln!(w, "{:e},{:e},{:e},{:e}", trace.times[i], trace.kinetic[i], trace.potential[i], trace.total[i])?;
    }
    w.flush()
}

fn bad_data(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn read_energy_csv(path: &Path) -> io::Result<EnergyTrace> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != ENERGY_HEADER {
        return Err(bad_data(format!("unexpected energy header {header:?}")));
    }
    let mut trace = EnergyTrace::default();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad_data(format!("line {}: {e}", n + 2)))?;
        if cols.len() != 4 {
            return Err(bad_data(format!("line {}: expected 4 columns", n + 2)));
        }
        trace.push(cols[0], cols[1], cols[2]);
    }
    Ok(trace)
}

fn snapshot_stem(step: u64) -> String {
    format!("snapshot_{step:06}")
}

/// Write `u1..u3` and the sidecar; returns the sidecar path.
pub fn write_snapshot(dir: &Path, step: u64, t: f64, grid: &GridSpec, state: &FieldState) -> io::Result<PathBuf> {
    let stem = snapshot_stem(step);
    let mut files = Vec::new();
    for (k, comp) in state.u.iter().enumerate() {
        let name = format!("{stem}_u{}.bin", k + 1);
        let mut w = BufWriter::new(File::create(dir.join(&name))?);
        for x in comp {
            w.write_all(&x.to_le_bytes())?;
        }
        w.flush()?;
        files.push(name);
    }
    let d = grid.dims();
    let sidecar = dir.join(format!("{stem}.txt"));
    let mut w = BufWriter::new(File::create(&sidecar)?);
    writeln!(w, "dims = {} {} {}", d[0], d[1], d[2])?;
    writeln!(w, "spacing = {:e}", grid.spacing())?;
    writeln!(w, "step = {step}")?;
    writeln!(w, "time = {t:e}")?;
    writeln!(w, "dtype = f64le")?;
    writeln!(w, "order = x_fastest")?;
    writeln!(w, "components = {}", files.join(" "))?;
    w.flush()?;
    Ok(sidecar)
}

/// A displacement snapshot read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dims: [usize; 3],
    pub spacing: f64,
    pub step: u64,
    pub time: f64,
    pub u: [Vec<f64>; 3],
}

impl Snapshot {
    pub fn index(&self, node: [usize; 3]) -> usize {
        node[0] + self.dims[0] * (node[1] + self.dims[1] * node[2])
    }

    pub fn magnitude(&self, node: [usize; 3]) -> f64 {
        let i = self.index(node);
        (self.u[0][i].powi(2) + self.u[1][i].powi(2) + self.u[2][i].powi(2)).sqrt()
    }
}

fn read_key_values(path: &Path) -> io::Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (k, v) = line.split_once('=').ok_or_else(|| bad_data(format!("malformed line {line:?}")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn field<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> io::Result<T> {
    map.get(key)
        .ok_or_else(|| bad_data(format!("missing key {key}")))?
        .parse()
        .map_err(|_| bad_data(format!("bad value for {key}")))
}

pub fn read_snapshot(sidecar: &Path) -> io::Result<Snapshot> {
    let map = read_key_values(sidecar)?;
    let dims: Vec<usize> = map
        .get("dims")
        .ok_or_else(|| bad_data("missing key dims"))?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad_data("bad dims")))
        .collect::<io::Result<_>>()?;
    let dims: [usize; 3] = dims.try_into().map_err(|_| bad_data("dims needs three values"))?;
    let names: Vec<&str> = map.get("components").map(|s| s.split_whitespace().collect()).unwrap_or_default();
    if names.len() != 3 {
        return Err(bad_data("expected three component files"));
    }
    let n = dims.iter().product::<usize>();
    let dir = sidecar.parent().unwrap_or(Path::new("."));
    let mut u: [Vec<f64>; 3] = Default::default();
    for (comp, name) in u.iter_mut().zip(names) {
        let mut bytes = Vec::new();
        File::open(dir.join(name))?.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * n {
            return Err(bad_data(format!("{name}: expected {} bytes, found {}", 8 * n, bytes.len())));
        }
        *comp = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    }
    Ok(Snapshot { dims, spacing: field(&map, "spacing")?, step: field(&map, "step")?, time: field(&map, "time")?, u })
}

/// Sidecars in `dir`, in step order.
pub fn list_snapshots(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "txt")
                && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("snapshot_"))
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Reflection measurement as `key = value` lines.
pub fn format_reflection_report(report: &ReflectionReport, pml_cells: usize) -> String {
    format!(
        "pml_cells = {pml_cells}\n\
         max_relative_error = {:e}\n\
         max_abs_difference = {:e}\n\
         reference_peak = {:e}\n\
         probe_half_cells = {}\n\
         reference_margin_cells = {}\n\
         steps = {}\n",
        report.max_relative_error,
        report.max_abs_difference,
        report.reference_peak,
        report.probe_half_cells,
        report.reference_margin_cells,
        report.steps,
    )
}

pub fn write_reflection_report(path: &Path, reports: &[(usize, ReflectionReport)]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (i, (cells, r)) in reports.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        write!(w, "{}", format_reflection_report(r, *cells))?;
    }
    w.flush()
}
