//! Time-series CSV ingestion.
//!
//! Each file starts with a `# unit: <unit>` line followed by a header and one
//! row per step:
//!
//! ```text
//! # unit: EUR/MWh
//! timestamp,value
//! 2021-01-01T00:00:00,41.2
//! ```
//!
//! The demand file carries both load categories: `timestamp,ch,wh`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Timelike};

use super::{HistoricalDay, Horizon};
use crate::error::{Error, Result};

pub const PRICE_FILE: &str = "prices.csv";
pub const DEMAND_FILE: &str = "demand.csv";
pub const PV_FILE: &str = "pv.csv";

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SignalKind {
    Price,
    Demand,
    Pv,
}

impl SignalKind {
    fn header(self) -> &'static [&'static str] {
        match self {
            SignalKind::Price | SignalKind::Pv => &["timestamp", "value"],
            SignalKind::Demand => &["timestamp", "ch", "wh"],
        }
    }

    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            SignalKind::Price => &[("EUR/MWh", 1e-3), ("kEUR/MWh", 1.0)],
            SignalKind::Demand => &[("MW", 1.0), ("kW", 1e-3)],
            SignalKind::Pv => &[("cf", 1.0), ("%", 1e-2)],
        }
    }
}

/// Days parsed from one signal file: per date, one optional value row per step.
type DaySlots = BTreeMap<NaiveDate, Vec<Option<Vec<f64>>>>;

/// Result of [`load_dataset`]: complete days plus notes about dropped partial days.
#[derive(Clone, Debug, Default)]
pub struct LoadedDataset {
    pub days: Vec<HistoricalDay>,
    pub warnings: Vec<String>,
}

pub fn load_dataset(
    price_path: impl AsRef<Path>,
    demand_path: impl AsRef<Path>,
    pv_path: impl AsRef<Path>,
    horizon: &Horizon,
) -> Result<LoadedDataset> {
    horizon.validate()?;
    let paths = [
        price_path.as_ref().to_path_buf(),
        demand_path.as_ref().to_path_buf(),
        pv_path.as_ref().to_path_buf(),
    ];
    let kinds = [SignalKind::Price, SignalKind::Demand, SignalKind::Pv];
    let mut signals = Vec::with_capacity(3);
    for (path, kind) in paths.iter().zip(kinds) {
        signals.push(read_signal(path, kind, horizon.tau_minutes)?);
    }

    let dates: BTreeSet<NaiveDate> = signals.iter().flat_map(|s| s.keys().copied()).collect();
    let dates: Vec<NaiveDate> = dates.into_iter().collect();
    let incomplete_signal = |date: &NaiveDate| -> Option<usize> {
        signals.iter().position(|s| match s.get(date) {
            Some(slots) => slots.iter().any(Option::is_none),
            None => true,
        })
    };

    let mut out = LoadedDataset::default();
    let first = dates.iter().position(|d| incomplete_signal(d).is_none());
    let last = dates.iter().rposition(|d| incomplete_signal(d).is_none());
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) => (f, l),
        _ => {
            for d in &dates {
                out.warnings.push(format!("dropped partial day {d}"));
            }
            return Ok(out);
        }
    };
    for d in dates[..first].iter().chain(&dates[last + 1..]) {
        let note = format!("dropped partial day {d}");
        log::warn!("{note}");
        out.warnings.push(note);
    }
    for date in &dates[first..=last] {
        if let Some(sig) = incomplete_signal(date) {
            let present = signals[sig]
                .get(date)
                .map_or(0, |s| s.iter().filter(|v| v.is_some()).count());
            return Err(Error::GapInsideDay {
                path: paths[sig].clone(),
                day: *date,
                reason: format!("{present} of {} steps present", horizon.steps_per_day()),
            });
        }
        let column = |sig: usize, col: usize| -> Vec<f64> {
            signals[sig][date]
                .iter()
                .map(|row| row.as_ref().expect("complete day")[col])
                .collect()
        };
        out.days.push(HistoricalDay {
            date: *date,
            price: column(0, 0),
            demand_ch: column(1, 0),
            demand_wh: column(1, 1),
            pv_cf: column(2, 0),
        });
    }
    Ok(out)
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_local());
    }
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn read_unit(text: &str) -> Option<String> {
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let comment = line.strip_prefix('#')?.trim();
        let rest = comment.strip_prefix("unit:").or_else(|| comment.strip_prefix("unit="));
        if let Some(unit) = rest {
            return Some(unit.trim().to_string());
        }
    }
    None
}

fn read_signal(path: &Path, kind: SignalKind, tau_minutes: u32) -> Result<DaySlots> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let unit = read_unit(&text);
    let factor = unit
        .as_deref()
        .and_then(|u| kind.units().iter().find(|(name, _)| *name == u))
        .map(|(_, f)| *f)
        .ok_or_else(|| Error::UnitMismatch {
            path: path.to_path_buf(),
            expected: kind.units().iter().map(|(u, _)| *u).collect(),
            found: unit.clone(),
        })?;

    let malformed = |line: usize, reason: String| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| malformed(e.position().map_or(1, |p| p.line() as usize), e.to_string()))?
        .clone();
    let expected = kind.header();
    if header.iter().ne(expected.iter().copied()) {
        let line = header.position().map_or(1, |p| p.line() as usize);
        return Err(malformed(
            line,
            format!(
                "header {:?}, expected {:?}",
                header.iter().collect::<Vec<_>>(),
                expected
            ),
        ));
    }

    let steps = (1440 / tau_minutes) as usize;
    let mut days = DaySlots::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let ts =
            parse_timestamp(&record[0]).ok_or_else(|| malformed(line, format!("bad timestamp `{}`", &record[0])))?;
        let minute = ts.hour() * 60 + ts.minute();
        if ts.second() != 0 || ts.nanosecond() != 0 || minute % tau_minutes != 0 {
            return Err(malformed(
                line,
                format!("timestamp {ts} is off the {tau_minutes}-minute grid"),
            ));
        }
        let mut values = Vec::with_capacity(record.len() - 1);
        for field in record.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| malformed(line, format!("value `{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(malformed(line, format!("value `{field}` is not finite")));
            }
            let v = v * factor;
            match kind {
                SignalKind::Price => {}
                SignalKind::Demand if v < 0.0 => return Err(malformed(line, format!("negative demand {v}"))),
                SignalKind::Demand => {}
                SignalKind::Pv if !(0.0..=1.0).contains(&v) => {
                    return Err(Error::CapacityFactorOutOfRange {
                        path: path.to_path_buf(),
                        line,
                        value: v,
                    })
                }
                SignalKind::Pv => {}
            }
            values.push(v);
        }
        let slots = days.entry(ts.date()).or_insert_with(|| vec![None; steps]);
        let slot = &mut slots[(minute / tau_minutes) as usize];
        if slot.is_some() {
            return Err(malformed(line, format!("duplicate timestamp {ts}")));
        }
        *slot = Some(values);
    }
    Ok(days)
}

/// Write days as the three signal files in `dir`, in internal units so that a
/// reload reproduces every value bit for bit.
pub fn write_dataset(days: &[HistoricalDay], dir: impl AsRef<Path>) -> Result<[PathBuf; 3]> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let steps = days.first().map_or(24, HistoricalDay::steps);
    if steps == 0 || 1440 % steps != 0 {
        return Err(Error::config(format!("{steps} steps per day does not divide a day")));
    }
    let tau = (1440 / steps) as u32;

    let mut price = String::from("# unit: kEUR/MWh\ntimestamp,value\n");
    let mut demand = String::from("# unit: MW\ntimestamp,ch,wh\n");
    let mut pv = String::from("# unit: cf\ntimestamp,value\n");
    for day in days {
        day.validate(steps)?;
        for k in 0..steps {
            let minute = k as u32 * tau;
            let ts = day
                .date
                .and_hms_opt(minute / 60, minute % 60, 0)
                .expect("minute of day is in range")
                .format("%Y-%m-%dT%H:%M:%S");
            let _ = writeln!(price, "{ts},{}", day.price[k]);
            let _ = writeln!(demand, "{ts},{},{}", day.demand_ch[k], day.demand_wh[k]);
            let _ = writeln!(pv, "{ts},{}", day.pv_cf[k]);
        }
    }
    let paths = [dir.join(PRICE_FILE), dir.join(DEMAND_FILE), dir.join(PV_FILE)];
    for (path, body) in paths.iter().zip([price, demand, pv]) {
        std::fs::write(path, body).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_demo_dataset;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn hourly(day: &str, hours: std::ops::Range<u32>, value: &str) -> String {
        hours.map(|h| format!("{day}T{h:02}:00:00,{value}\n")).collect()
    }

    fn files(dir: &Path, price_body: &str, demand_body: &str, pv_body: &str) -> [PathBuf; 3] {
        [
            write(dir, "p.csv", &format!("# unit: EUR/MWh\ntimestamp,value\n{price_body}")),
            write(dir, "d.csv", &format!("# unit: kW\ntimestamp,ch,wh\n{demand_body}")),
            write(dir, "v.csv", &format!("# unit: cf\ntimestamp,value\n{pv_body}")),
        ]
    }

    #[test]
    fn trailing_half_day_is_dropped() {
        let tmp = tempfile::tempdir().unwrap();
        let mut p = String::new();
        let mut d = String::new();
        let mut v = String::new();
        for day in ["2021-03-01", "2021-03-02", "2021-03-03"] {
            p += &hourly(day, 0..24, "-5");
            d += &hourly(day, 0..24, "1500,300");
            v += &hourly(day, 0..24, "0.5");
        }
        p += &hourly("2021-03-04", 0..12, "10");
        d += &hourly("2021-03-04", 0..12, "0,0");
        v += &hourly("2021-03-04", 0..12, "0");
        let [a, b, c] = files(tmp.path(), &p, &d, &v);
        let out = load_dataset(a, b, c, &Horizon::default()).unwrap();
        assert_eq!(out.days.len(), 3);
        assert_eq!(out.warnings.len(), 1);
        // Negative prices are legal; €/MWh -> k€/MWh, kW -> MW.
        assert_eq!(out.days[0].price[0], -0.005);
        assert_eq!(out.days[0].demand_ch[0], 1.5);
        assert_eq!(out.days[0].demand_wh[0], 0.3);
    }

    #[test]
    fn capacity_factor_above_one_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let [a, b, c] = files(
            tmp.path(),
            &hourly("2021-03-01", 0..24, "40"),
            &hourly("2021-03-01", 0..24, "1,1"),
            &hourly("2021-03-01", 0..24, "1.2"),
        );
        let err = load_dataset(a, b, c, &Horizon::default()).unwrap_err();
        assert!(matches!(err, Error::CapacityFactorOutOfRange { line: 3, .. }));
        assert!(err.to_string().contains("capacity factor out of range"));
    }

    #[test]
    fn gap_inside_day_reports_day() {
        let tmp = tempfile::tempdir().unwrap();
        let mut p = String::new();
        for day in ["2021-03-01", "2021-03-02", "2021-03-03"] {
            p += &hourly(day, 0..24, "40");
        }
        let mut d = hourly("2021-03-01", 0..24, "1,1");
        d += &hourly("2021-03-02", 0..10, "1,1");
        d += &hourly("2021-03-02", 11..24, "1,1");
        d += &hourly("2021-03-03", 0..24, "1,1");
        let mut v = String::new();
        for day in ["2021-03-01", "2021-03-02", "2021-03-03"] {
            v += &hourly(day, 0..24, "0");
        }
        let [a, b, c] = files(tmp.path(), &p, &d, &v);
        match load_dataset(a, b, c, &Horizon::default()) {
            Err(Error::GapInsideDay { day, .. }) => {
                assert_eq!(day, NaiveDate::from_ymd_opt(2021, 3, 2).unwrap())
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let tmp = tempfile::tempdir().unwrap();
        let p = "2021-03-01T00:00:00,40\n2021-03-01T01:00:00,abc\n";
        let [a, b, c] = files(tmp.path(), p, "", "");
        match load_dataset(a, b, c, &Horizon::default()) {
            Err(Error::MalformedRow { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unit_header_mismatch() {
        let tmp = tempfile::tempdir().unwrap();
        let a = write(tmp.path(), "p.csv", "# unit: USD/MWh\ntimestamp,value\n");
        let b = write(tmp.path(), "d.csv", "# unit: MW\ntimestamp,ch,wh\n");
        let c = write(tmp.path(), "v.csv", "# unit: cf\ntimestamp,value\n");
        assert!(matches!(
            load_dataset(&a, &b, &c, &Horizon::default()),
            Err(Error::UnitMismatch { .. })
        ));
        let a = write(tmp.path(), "p.csv", "timestamp,value\n");
        assert!(matches!(
            load_dataset(&a, &b, &c, &Horizon::default()),
            Err(Error::UnitMismatch { found: None, .. })
        ));
    }

    #[test]
    fn off_grid_timestamp_is_malformed() {
        let tmp = tempfile::tempdir().unwrap();
        let [a, b, c] = files(tmp.path(), "2021-03-01T00:30:00,40\n", "", "");
        assert!(matches!(
            load_dataset(a, b, c, &Horizon::default()),
            Err(Error::MalformedRow { .. })
        ));
    }

    #[test]
    fn write_then_load_is_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let days = make_demo_dataset(3, 5);
        let [a, b, c] = write_dataset(&days, tmp.path()).unwrap();
        let back = load_dataset(a, b, c, &Horizon::default()).unwrap();
        assert!(back.warnings.is_empty());
        assert_eq!(back.days, days);
    }
}
