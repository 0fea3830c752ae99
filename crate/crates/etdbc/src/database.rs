//! Persistent store of capture records: one self-describing columnar file
//! per slice plus a manifest, with a CSV mirror for interchange. All columns
//! are f64 (counts are exact integers well below 2⁵³), missing values are
//! NaN in the binary file and empty fields in the CSV.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::etd::Branch;
use crate::propagation::TrajectoryReport;

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"ETDBCCOL";

/// Column names of the record schema. Angles are radians; the CSV mirror
/// carries the same names with a `_rad` note in the documentation.
pub const COLUMNS: &[&str] = &[
    // group 1: surface state
    "x", "y", "z", "gamma", "sigma", "zeta", "branch", "ix", "iy",
    // group 2: capture robustness
    "n_rev_total", "n_rev_prograde", "n_rev_retrograde", "t_capture", "n_crossings",
    "t_collision",
    // group 3: origin around the Earth at backward escape
    "a_T", "e_T", "i_T", "raan_T", "argp_T", "nu_T",
    // group 4: perilune snapshots
    "r2_1stRev", "a_1stRev", "e_1stRev", "i_1stRev", "raan_1stRev", "argp_1stRev",
    "r2_min", "a_rmin", "e_rmin", "i_rmin", "raan_rmin", "argp_rmin",
    "r2_min1", "a_rmin1", "e_rmin1", "i_rmin1", "raan_rmin1", "argp_rmin1",
    "r2_min2", "a_rmin2", "e_rmin2", "i_rmin2", "raan_rmin2", "argp_rmin2",
    "i_polar",
];

/// Perilune element snapshot carried by a record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriluneCols {
    pub r2: f64,
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
}

/// One database row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub zeta: f64,
    pub branch: Branch,
    /// Grid indices of the source node (boundary-seeded records use the
    /// nearest node).
    pub ix: i64,
    pub iy: i64,
    pub n_rev_total: i64,
    pub n_rev_prograde: i64,
    pub n_rev_retrograde: i64,
    pub t_capture: f64,
    pub n_crossings: i64,
    pub t_collision: Option<f64>,
    pub a_t: f64,
    pub e_t: f64,
    pub i_t: f64,
    pub raan_t: f64,
    pub argp_t: f64,
    pub nu_t: f64,
    pub first_perilune: Option<PeriluneCols>,
    pub closest_perilune: Option<PeriluneCols>,
    /// The two closest approaches after the first perilune, min2 farther
    /// than min1.
    pub min1: Option<PeriluneCols>,
    pub min2: Option<PeriluneCols>,
    pub i_polar: Option<f64>,
}

impl CaptureRecord {
    /// Assemble a record from a classification report; the report must be a
    /// capture with origin elements present.
    pub fn from_report(
        x: f64,
        y: f64,
        z: f64,
        gamma: f64,
        sigma: f64,
        zeta: f64,
        branch: Branch,
        ix: i64,
        iy: i64,
        report: &TrajectoryReport,
    ) -> Result<Self> {
        let origin = report
            .origin_elements
            .as_ref()
            .ok_or(Error::InvalidParameter(
                "record requires origin elements (backward escape)".into(),
            ))?;
        let peri_cols = |p: &crate::propagation::PeriluneRecord| PeriluneCols {
            r2: p.r2,
            a: p.elements.a,
            e: p.elements.e,
            i: p.elements.i,
            raan: p.elements.raan,
            argp: p.elements.argp,
        };
        Ok(Self {
            x,
            y,
            z,
            gamma,
            sigma,
            zeta,
            branch,
            ix,
            iy,
            n_rev_total: report.n_rev_total as i64,
            n_rev_prograde: report.n_rev_prograde as i64,
            n_rev_retrograde: report.n_rev_retrograde as i64,
            t_capture: report.t_capture,
            n_crossings: report.n_crossings as i64,
            t_collision: report.t_collision,
            a_t: origin.a,
            e_t: origin.e,
            i_t: origin.i,
            raan_t: origin.raan,
            argp_t: origin.argp,
            nu_t: origin.nu,
            first_perilune: report.periluneapses.first.as_ref().map(peri_cols),
            closest_perilune: report.periluneapses.closest.as_ref().map(peri_cols),
            min1: report.periluneapses.min1.as_ref().map(peri_cols),
            min2: report.periluneapses.min2.as_ref().map(peri_cols),
            i_polar: report.periluneapses.i_polar,
        })
    }

    pub fn to_row(&self) -> Vec<f64> {
        let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
        let peri = |p: &Option<PeriluneCols>| match p {
            Some(p) => [p.r2, p.a, p.e, p.i, p.raan, p.argp],
            None => [f64::NAN; 6],
        };
        let mut row = vec![
            self.x,
            self.y,
            self.z,
            self.gamma,
            self.sigma,
            self.zeta,
            self.branch.index() as f64,
            self.ix as f64,
            self.iy as f64,
            self.n_rev_total as f64,
            self.n_rev_prograde as f64,
            self.n_rev_retrograde as f64,
            self.t_capture,
            self.n_crossings as f64,
            opt(self.t_collision),
            self.a_t,
            self.e_t,
            self.i_t,
            self.raan_t,
            self.argp_t,
            self.nu_t,
        ];
        row.extend(peri(&self.first_perilune));
        row.extend(peri(&self.closest_perilune));
        row.extend(peri(&self.min1));
        row.extend(peri(&self.min2));
        row.push(opt(self.i_polar));
        debug_assert_eq!(row.len(), COLUMNS.len());
        row
    }

    pub fn from_row(row: &[f64]) -> Result<Self> {
        if row.len() != COLUMNS.len() {
            return Err(Error::Malformed {
                path: "<row>".into(),
                reason: format!("expected {} columns, got {}", COLUMNS.len(), row.len()),
            });
        }
        let opt = |v: f64| if v.is_nan() { None } else { Some(v) };
        let peri = |c: &[f64]| {
            if c[0].is_nan() {
                None
            } else {
                Some(PeriluneCols {
                    r2: c[0],
                    a: c[1],
                    e: c[2],
                    i: c[3],
                    raan: c[4],
                    argp: c[5],
                })
            }
        };
        Ok(Self {
            x: row[0],
            y: row[1],
            z: row[2],
            gamma: row[3],
            sigma: row[4],
            zeta: row[5],
            branch: Branch::from_index(row[6] as u8),
            ix: row[7] as i64,
            iy: row[8] as i64,
            n_rev_total: row[9] as i64,
            n_rev_prograde: row[10] as i64,
            n_rev_retrograde: row[11] as i64,
            t_capture: row[12],
            n_crossings: row[13] as i64,
            t_collision: opt(row[14]),
            a_t: row[15],
            e_t: row[16],
            i_t: row[17],
            raan_t: row[18],
            argp_t: row[19],
            nu_t: row[20],
            first_perilune: peri(&row[21..27]),
            closest_perilune: peri(&row[27..33]),
            min1: peri(&row[33..39]),
            min2: peri(&row[39..45]),
            i_polar: opt(row[45]),
        })
    }

    /// Numeric value of a named column.
    pub fn field(&self, name: &str) -> Option<f64> {
        let idx = COLUMNS.iter().position(|c| *c == name)?;
        let v = self.to_row()[idx];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    pub fn sort_key(&self) -> (f64, f64, f64, f64, f64, u8) {
        (
            self.gamma,
            self.z,
            self.zeta,
            self.x,
            self.y,
            self.branch.index(),
        )
    }
}

/// Slice coordinates used as the storage key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceKey {
    pub gamma: f64,
    pub z: f64,
    pub zeta: f64,
}

impl SliceKey {
    pub fn file_stem(&self) -> String {
        fn tag(v: f64) -> String {
            format!("{:+.6}", v).replace('.', "p").replace('+', "").replace('-', "m")
        }
        format!("slice_g{}_z{}_zt{}", tag(self.gamma), tag(self.z), tag(self.zeta))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub key: SliceKey,
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub columns: Vec<String>,
    pub slices: Vec<ManifestEntry>,
}

/// Directory-backed store: one columnar file (plus a CSV mirror) per slice.
pub struct Database {
    dir: PathBuf,
    manifest: Manifest,
}

impl Database {
    pub fn create<P: AsRef<Path>>(dir: P) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            columns: COLUMNS.iter().map(|s| s.to_string()).collect(),
            slices: Vec::new(),
        };
        let db = Self { dir, manifest };
        db.write_manifest()?;
        Ok(db)
    }

    pub fn open<P: AsRef<Path>>(dir: P) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let text = std::fs::read_to_string(dir.join("manifest.json"))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path: dir.join("manifest.json").display().to_string(),
            reason: e.to_string(),
        })?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaMismatch {
                expected: SCHEMA_VERSION,
                found: manifest.schema_version,
            });
        }
        Ok(Self { dir, manifest })
    }

    pub fn open_or_create<P: AsRef<Path>>(dir: P) -> Result<Self> {
        let dir_ref = dir.as_ref();
        if dir_ref.join("manifest.json").exists() {
            Self::open(dir_ref)
        } else {
            Self::create(dir_ref)
        }
    }

    fn write_manifest(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Append records to a slice, rejecting duplicate (grid index, branch)
    /// keys within it. Records are kept in the stable sort order.
    pub fn append(&mut self, key: SliceKey, records: &[CaptureRecord]) -> Result<usize> {
        let mut existing = match self.manifest.slices.iter().position(|e| e.key == key) {
            Some(idx) => {
                let entry = self.manifest.slices[idx].clone();
                read_columnar(&self.dir.join(&entry.file))?.1
            }
            None => Vec::new(),
        };
        let mut keys: HashSet<(i64, i64, u8)> = existing
            .iter()
            .map(|r| (r.ix, r.iy, r.branch.index()))
            .collect();
        for r in records {
            let k = (r.ix, r.iy, r.branch.index());
            if !keys.insert(k) {
                return Err(Error::DuplicateKey {
                    gamma: key.gamma,
                    z: key.z,
                    zeta: key.zeta,
                    ix: r.ix,
                    iy: r.iy,
                    branch: r.branch.index(),
                });
            }
            existing.push(r.clone());
        }
        existing.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).unwrap());
        let stem = key.file_stem();
        let file = format!("{stem}.etdb");
        write_columnar(&self.dir.join(&file), key, &existing)?;
        write_csv_mirror(&self.dir.join(format!("{stem}.csv")), &existing)?;
        let rows = existing.len();
        match self.manifest.slices.iter_mut().find(|e| e.key == key) {
            Some(e) => {
                e.rows = rows;
            }
            None => self.manifest.slices.push(ManifestEntry { key, file, rows }),
        }
        self.write_manifest()?;
        Ok(records.len())
    }

    pub fn slice(&self, key: SliceKey) -> Result<Vec<CaptureRecord>> {
        match self.manifest.slices.iter().find(|e| e.key == key) {
            Some(e) => Ok(read_columnar(&self.dir.join(&e.file))?.1),
            None => Ok(Vec::new()),
        }
    }

    pub fn slice_keys(&self) -> Vec<SliceKey> {
        self.manifest.slices.iter().map(|e| e.key).collect()
    }

    /// All records across slices in the stable order.
    pub fn scan(&self) -> Result<Vec<CaptureRecord>> {
        let mut out = Vec::new();
        for e in &self.manifest.slices {
            out.extend(read_columnar(&self.dir.join(&e.file))?.1);
        }
        out.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).unwrap());
        Ok(out)
    }

    /// Records passing a programmatic predicate, stable order.
    pub fn query<F: Fn(&CaptureRecord) -> bool>(&self, pred: F) -> Result<Vec<CaptureRecord>> {
        Ok(self.scan()?.into_iter().filter(|r| pred(r)).collect())
    }

    /// Records passing all named-field range constraints ([lo, hi],
    /// inclusive; records missing the field fail the constraint).
    pub fn query_ranges(&self, ranges: &[FieldRange]) -> Result<Vec<CaptureRecord>> {
        self.query(|r| {
            ranges.iter().all(|fr| {
                r.field(&fr.field)
                    .map(|v| v >= fr.lo && v <= fr.hi)
                    .unwrap_or(false)
            })
        })
    }

    /// Histogram of a named field over uniform bins; records missing the
    /// field or falling outside [lo, hi) are counted in `outside`.
    pub fn histogram(&self, field: &str, lo: f64, hi: f64, nbins: usize) -> Result<Histogram> {
        if !COLUMNS.contains(&field) {
            return Err(Error::InvalidParameter(format!("unknown field: {field}")));
        }
        if nbins == 0 || !(hi > lo) {
            return Err(Error::InvalidParameter("bad binning".into()));
        }
        let mut counts = vec![0u64; nbins];
        let mut outside = 0u64;
        let width = (hi - lo) / nbins as f64;
        for r in self.scan()? {
            match r.field(field) {
                Some(v) if v >= lo && v < hi => {
                    counts[((v - lo) / width) as usize] += 1;
                }
                _ => outside += 1,
            }
        }
        Ok(Histogram {
            field: field.to_string(),
            lo,
            hi,
            counts,
            outside,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldRange {
    pub field: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    pub field: String,
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub outside: u64,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        let mut s = format!("bin_lo,bin_hi,count # field={} outside={}\n", self.field, self.outside);
        for (i, c) in self.counts.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{c}\n",
                self.lo + width * i as f64,
                self.lo + width * (i + 1) as f64
            ));
        }
        s
    }
}

#[derive(Serialize, Deserialize)]
struct ColumnarHeader {
    version: u32,
    columns: Vec<String>,
    rows: usize,
    slice: SliceKey,
}

fn write_columnar(path: &Path, key: SliceKey, records: &[CaptureRecord]) -> Result<()> {
    let header = ColumnarHeader {
        version: SCHEMA_VERSION,
        columns: COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows: records.len(),
        slice: key,
    };
    let hjson = serde_json::to_vec(&header).expect("header serializes");
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(MAGIC)?;
    f.write_all(&(hjson.len() as u64).to_le_bytes())?;
    f.write_all(&hjson)?;
    // column-major payload
    let rows: Vec<Vec<f64>> = records.iter().map(|r| r.to_row()).collect();
    for col in 0..COLUMNS.len() {
        for row in &rows {
            f.write_all(&row[col].to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_columnar(path: &Path) -> Result<(SliceKey, Vec<CaptureRecord>)> {
    let pstr = path.display().to_string();
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Malformed {
            path: pstr,
            reason: "bad magic".into(),
        });
    }
    let mut len8 = [0u8; 8];
    f.read_exact(&mut len8)?;
    let hlen = u64::from_le_bytes(len8) as usize;
    let mut hjson = vec![0u8; hlen];
    f.read_exact(&mut hjson)?;
    let header: ColumnarHeader = serde_json::from_slice(&hjson).map_err(|e| Error::Malformed {
        path: pstr.clone(),
        reason: e.to_string(),
    })?;
    if header.version != SCHEMA_VERSION {
        return Err(Error::SchemaMismatch {
            expected: SCHEMA_VERSION,
            found: header.version,
        });
    }
    if header.columns != COLUMNS {
        return Err(Error::Malformed {
            path: pstr,
            reason: "column set differs from the current schema".into(),
        });
    }
    let n = header.rows;
    let mut cols = vec![vec![0f64; n]; COLUMNS.len()];
    let mut buf = [0u8; 8];
    for col in cols.iter_mut() {
        for v in col.iter_mut() {
            f.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
    }
    let mut records = Vec::with_capacity(n);
    let mut row = vec![0f64; COLUMNS.len()];
    for i in 0..n {
        for (c, col) in cols.iter().enumerate() {
            row[c] = col[i];
        }
        records.push(CaptureRecord::from_row(&row)?);
    }
    Ok((header.slice, records))
}

fn write_csv_mirror(path: &Path, records: &[CaptureRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", COLUMNS.join(","))?;
    for r in records {
        let row = r.to_row();
        let line: Vec<String> = row
            .iter()
            .map(|v| if v.is_nan() { String::new() } else { format!("{v}") })
            .collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}

/// Read a CSV mirror back into records (empty fields are nulls).
pub fn read_csv_records(path: &Path) -> Result<Vec<CaptureRecord>> {
    let pstr = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if ln == 0 || line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|c| {
                let c = c.trim();
                if c.is_empty() {
                    f64::NAN
                } else {
                    c.parse().unwrap_or(f64::NAN)
                }
            })
            .collect();
        if vals.len() != COLUMNS.len() {
            return Err(Error::Malformed {
                path: pstr,
                reason: format!("line {}: expected {} columns", ln + 1, COLUMNS.len()),
            });
        }
        out.push(CaptureRecord::from_row(&vals)?);
    }
    Ok(out)
}
