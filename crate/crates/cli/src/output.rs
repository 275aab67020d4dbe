//! CSV and JSON rendering. Every float is written with 17 significant
//! digits so that outputs round-trip and compare byte for byte.

use std::io::{self, Write};
use std::path::Path;

use fracctrl_core::system::{ControlLaw, Trajectory};
use fracctrl_core::SolverContext;
use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with floats at 17 significant digits; non-finite values
/// become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, PrettySignificant::default());
    value.serialize(&mut ser).expect("summary serializes");
    out.push(b'\n');
    out
}

/// `PrettyFormatter` layout with [`fmt_f64`] floats.
#[derive(Default)]
struct PrettySignificant<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for PrettySignificant<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory CSV")
}

/// `segment, t, x1..xn, side`. Segment starts after an impulse are the
/// `right` limits, segment ends before one the `left` limits.
pub fn trajectory_csv(traj: &Trajectory<f64>) -> Vec<u8> {
    let mut w = csv_writer();
    let n = traj.dim();
    let mut header = vec!["segment".to_string(), "t".to_string()];
    header.extend((1..=n).map(|k| format!("x{k}")));
    header.push("side".into());
    w.write_record(&header).expect("in-memory CSV");
    let last = traj.segments.len() - 1;
    for (i, seg) in traj.segments.iter().enumerate() {
        for (l, (t, x)) in seg.times.iter().zip(&seg.values).enumerate() {
            let side = if l == 0 && i > 0 {
                "right"
            } else if l + 1 == seg.len() && i < last {
                "left"
            } else {
                "interior"
            };
            let mut row = vec![i.to_string(), fmt_f64(*t)];
            row.extend(x.iter().map(|v| fmt_f64(*v)));
            row.push(side.into());
            w.write_record(&row).expect("in-memory CSV");
        }
    }
    finish(w)
}

/// `kind, index, t, c1..cp`: `u` rows per segment node, then one `v` row
/// per impulse at its instant.
pub fn controls_csv(ctx: &SolverContext<f64>, controls: &ControlLaw<f64>) -> fracctrl_core::Result<Vec<u8>> {
    let mut w = csv_writer();
    let p = ctx.spec().p();
    let mut header = vec!["kind".to_string(), "index".to_string(), "t".to_string()];
    header.extend((1..=p).map(|k| format!("c{k}")));
    w.write_record(&header).expect("in-memory CSV");
    for (i, seg) in controls.u_segments.iter().enumerate() {
        let times = ctx.segment_times(i)?;
        for (t, u) in times.iter().zip(ctx.control_samples(i, seg)?) {
            let mut row = vec!["u".to_string(), i.to_string(), fmt_f64(*t)];
            row.extend(u.iter().map(|v| fmt_f64(*v)));
            w.write_record(&row).expect("in-memory CSV");
        }
    }
    for (k, (v, t)) in controls.v_impulses.iter().zip(&ctx.spec().impulse_times).enumerate() {
        let mut row = vec!["v".to_string(), (k + 1).to_string(), fmt_f64(*t)];
        row.extend(v.iter().map(|x| fmt_f64(*x)));
        w.write_record(&row).expect("in-memory CSV");
    }
    Ok(finish(w))
}

/// Generic table with a header and pre-formatted cells.
pub fn table_csv(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv_writer();
    w.write_record(header).expect("in-memory CSV");
    for r in rows {
        w.write_record(r).expect("in-memory CSV");
    }
    finish(w)
}

/// Files produced by one run, written only after every computation
/// succeeded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub files: Vec<(String, Vec<u8>)>,
}

impl RunOutput {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Writes each file through a temporary sibling and a rename.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp"));
            std::fs::write(&tmp, bytes)?;
            std::fs::rename(&tmp, dir.join(name))?;
        }
        Ok(())
    }
}
