use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::model::{Dataset, Group, ModelError};
use crate::ode::ForcingSchedule;

use super::{fmt_f64, parse_f64, read_string, write_atomic, IoError};

const DATA_HEADER: [&str; 4] = ["group", "time", "channel", "value"];
const TREATMENT_HEADER: [&str; 3] = ["group", "t_on", "t_off"];

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, path: &Path, expected: &[&str]) -> Result<(), IoError> {
    let header = rdr.headers().map_err(|e| IoError::parse(path, 1, e.to_string()))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(IoError::parse(
            path,
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

fn field(rec: &csv::StringRecord, i: usize) -> &str {
    rec.get(i).unwrap_or("")
}

fn number(rec: &csv::StringRecord, i: usize, name: &str, path: &Path, line: u64) -> Result<f64, IoError> {
    let s = field(rec, i);
    match parse_f64(s) {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(IoError::parse(path, line, format!("{name} {s:?} is not a finite number"))),
    }
}

/// Parses `group,time,channel,value` rows. Channels are 0-based and every
/// group must have a value for each channel at each of its times. Groups
/// keep their order of first appearance; `path` only labels errors.
pub fn parse_dataset(text: &str, path: &Path) -> Result<Dataset, IoError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, path, &DATA_HEADER)?;
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, BTreeMap<(u64, usize), (f64, u64)>> = HashMap::new();
    let mut n_channels = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IoError::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let group = field(&rec, 0);
        if group.is_empty() {
            return Err(IoError::parse(path, line, "empty group id"));
        }
        // folds -0 into 0 so both spell the same key
        let time = number(&rec, 1, "time", path, line)? + 0.0;
        let channel: usize = field(&rec, 2)
            .parse()
            .map_err(|_| IoError::parse(path, line, format!("channel {:?} is not a non-negative integer", field(&rec, 2))))?;
        let value = number(&rec, 3, "value", path, line)?;
        n_channels = n_channels.max(channel + 1);
        if !rows.contains_key(group) {
            order.push(group.to_string());
        }
        let slot = rows.entry(group.to_string()).or_default();
        if slot.insert((time.to_bits(), channel), (value, line)).is_some() {
            return Err(IoError::parse(path, line, format!("duplicate entry for group {group:?}, time {time}, channel {channel}")));
        }
    }
    let mut groups = Vec::with_capacity(order.len());
    for id in order {
        let entries = &rows[&id];
        let mut times: Vec<f64> = entries.keys().map(|&(t, _)| f64::from_bits(t)).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut obs = vec![Vec::with_capacity(times.len()); n_channels];
        for &t in &times {
            for (c, ch) in obs.iter_mut().enumerate() {
                match entries.get(&(t.to_bits(), c)) {
                    Some(&(v, _)) => ch.push(v),
                    None => {
                        return Err(ModelError::InvalidDataset(format!(
                            "{}: group {id:?} has no value for channel {c} at time {t}",
                            path.display()
                        ))
                        .into())
                    }
                }
            }
        }
        groups.push(Group::new(id, times, obs));
    }
    Ok(Dataset::new(groups)?)
}

pub fn read_dataset(path: &Path) -> Result<Dataset, IoError> {
    parse_dataset(&read_string(path)?, path)
}

/// Rows ordered by group, time, then channel.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut s = String::from("group,time,channel,value\n");
    for g in &data.groups {
        for (i, &t) in g.times.iter().enumerate() {
            for (c, ch) in g.observations.iter().enumerate() {
                s.push_str(&format!("{},{},{c},{}\n", g.id, fmt_f64(t), fmt_f64(ch[i])));
            }
        }
    }
    s
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<(), IoError> {
    write_atomic(path, dataset_to_csv(data).as_bytes())
}

/// Parses `group,t_on,t_off` rows into one on/off schedule per group.
pub fn parse_treatments(text: &str, path: &Path) -> Result<BTreeMap<String, ForcingSchedule>, IoError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, path, &TREATMENT_HEADER)?;
    let mut intervals: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut last_line: BTreeMap<String, u64> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IoError::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let group = field(&rec, 0);
        if group.is_empty() {
            return Err(IoError::parse(path, line, "empty group id"));
        }
        let on = number(&rec, 1, "t_on", path, line)?;
        let off = number(&rec, 2, "t_off", path, line)?;
        if off <= on {
            return Err(IoError::parse(path, line, format!("t_off {off} must exceed t_on {on}")));
        }
        intervals.entry(group.to_string()).or_default().push((on, off));
        last_line.insert(group.to_string(), line);
    }
    intervals
        .into_iter()
        .map(|(g, iv)| {
            let line = last_line[&g];
            ForcingSchedule::from_on_intervals(&iv)
                .map(|f| (g.clone(), f))
                .map_err(|e| IoError::parse(path, line, format!("group {g:?}: {e}")))
        })
        .collect()
}

pub fn read_treatments(path: &Path) -> Result<BTreeMap<String, ForcingSchedule>, IoError> {
    parse_treatments(&read_string(path)?, path)
}

/// Inverse of [`parse_treatments`] for indicator schedules.
pub fn treatments_to_csv<'a>(schedules: impl IntoIterator<Item = (&'a str, &'a ForcingSchedule)>) -> String {
    let mut s = String::from("group,t_on,t_off\n");
    for (g, f) in schedules {
        let bp = f.breakpoints();
        for (i, &v) in f.values().iter().enumerate() {
            if v != 0.0 && i > 0 && i < bp.len() {
                s.push_str(&format!("{g},{},{}\n", fmt_f64(bp[i - 1]), fmt_f64(bp[i])));
            }
        }
    }
    s
}

/// Attaches each group's schedule. Groups without one keep no treatment;
/// a schedule for an unknown group is an error.
pub fn apply_treatments(data: &mut Dataset, schedules: &BTreeMap<String, ForcingSchedule>) -> Result<(), IoError> {
    for id in schedules.keys() {
        if data.group(id).is_none() {
            return Err(ModelError::InvalidDataset(format!("treatment schedule for unknown group {id:?}")).into());
        }
    }
    for g in &mut data.groups {
        if let Some(f) = schedules.get(&g.id) {
            g.forcing = f.clone();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("data.csv")
    }

    #[test]
    fn parses_and_orders_groups() {
        let text = "group,time,channel,value\nB,1,0,3.5\nB,0,0,2\nA,0,0,1\nA,0,1,1.5\nB,0,1,0\nB,1,1,0.25\nA,2,0,4\nA,2,1,5\n";
        let d = parse_dataset(text, p()).unwrap();
        assert_eq!(d.groups[0].id, "B");
        assert_eq!(d.groups[0].times, vec![0.0, 1.0]);
        assert_eq!(d.groups[0].observations, vec![vec![2.0, 3.5], vec![0.0, 0.25]]);
        assert_eq!(d.groups[1].observations, vec![vec![1.0, 4.0], vec![1.5, 5.0]]);
        let again = parse_dataset(&dataset_to_csv(&d), p()).unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn negative_times_sort_correctly() {
        let d = parse_dataset("group,time,channel,value\nA,0,0,1\nA,-1,0,2\nA,-2,0,3\n", p()).unwrap();
        assert_eq!(d.groups[0].times, vec![-2.0, -1.0, 0.0]);
        assert_eq!(d.groups[0].observations[0], vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn malformed_row_names_file_and_line() {
        let text = "group,time,channel,value\nA,0,0,1\nA,1,0,oops\n";
        let err = parse_dataset(text, p()).unwrap_err().to_string();
        assert!(err.starts_with("data.csv:3:"), "{err}");
        let err = parse_dataset("group,time,channel,value\nA,0,0,1\nA,1,0\n", p()).unwrap_err().to_string();
        assert!(err.starts_with("data.csv:3:"), "{err}");
        let err = parse_dataset("group,time,channel,value\nA,0,-1,1\n", p()).unwrap_err().to_string();
        assert!(err.starts_with("data.csv:2:"), "{err}");
        let err = parse_dataset("group,t,channel,value\n", p()).unwrap_err().to_string();
        assert!(err.starts_with("data.csv:1:"), "{err}");
        let err = parse_dataset("group,time,channel,value\nA,0,0,1\nA,0,0,2\n", p()).unwrap_err().to_string();
        assert!(err.starts_with("data.csv:3:") && err.contains("duplicate"), "{err}");
    }

    #[test]
    fn missing_channel_is_rejected() {
        let text = "group,time,channel,value\nA,0,0,1\nA,0,1,1\nA,1,0,2\n";
        assert!(parse_dataset(text, p()).unwrap_err().to_string().contains("channel 1 at time 1"));
    }

    #[test]
    fn treatments_round_trip() {
        let text = "group,t_on,t_off\nP1,14,20\nP1,0,6\nP2,0,8.5\n";
        let s = parse_treatments(text, p()).unwrap();
        assert_eq!(s["P1"], ForcingSchedule::from_on_intervals(&[(0.0, 6.0), (14.0, 20.0)]).unwrap());
        assert_eq!(s["P1"].value_at(15.0), 1.0);
        assert_eq!(s["P1"].value_at(10.0), 0.0);
        let out = treatments_to_csv(s.iter().map(|(g, f)| (g.as_str(), f)));
        assert_eq!(out, "group,t_on,t_off\nP1,0.0,6.0\nP1,14.0,20.0\nP2,0.0,8.5\n");
        assert_eq!(parse_treatments(&out, p()).unwrap(), s);
    }

    #[test]
    fn bad_treatment_rows() {
        let err = parse_treatments("group,t_on,t_off\nP1,5,5\n", p()).unwrap_err().to_string();
        assert!(err.starts_with("data.csv:2:"), "{err}");
        let err = parse_treatments("group,t_on,t_off\nP1,0,6\nP1,4,8\n", p()).unwrap_err().to_string();
        assert!(err.contains("overlaps"), "{err}");
    }

    #[test]
    fn treatments_attach_to_groups() {
        let mut d = parse_dataset("group,time,channel,value\nA,0,0,1\nB,0,0,1\n", p()).unwrap();
        let s = parse_treatments("group,t_on,t_off\nB,0,1\n", p()).unwrap();
        apply_treatments(&mut d, &s).unwrap();
        assert_eq!(d.groups[0].forcing, ForcingSchedule::default());
        assert_eq!(d.groups[1].forcing.value_at(0.5), 1.0);
        let s = parse_treatments("group,t_on,t_off\nC,0,1\n", p()).unwrap();
        assert!(apply_treatments(&mut d, &s).is_err());
    }
}
