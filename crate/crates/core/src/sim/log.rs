//! Per-step simulation records and their CSV form.

use std::io::{self, Write};

use crate::geom::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub position: Vec3,
    pub rpy: Vec3,
    pub velocity_w: Vec3,
    pub omega: Vec3,
    pub gamma: Vec<f64>,
    pub gamma_ref: Vec<f64>,
    pub f_ref: Vec3,
    pub f_nom: Vec3,
    pub u: Vec<f64>,
    pub feasible: bool,
    /// The platform was inside the wind zone.
    pub wind: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    n_uavs: usize,
    records: Vec<LogRecord>,
}

impl SimLog {
    pub fn new(n_uavs: usize) -> Self {
        Self {
            n_uavs,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, r: LogRecord) {
        debug_assert!(self.records.last().is_none_or(|l| l.t < r.t));
        self.records.push(r);
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "t", "px", "py", "pz", "roll", "pitch", "yaw", "vx", "vy", "vz", "wx", "wy", "wz",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend((1..=self.n_uavs).map(|i| format!("g{i}")));
        h.extend((1..=self.n_uavs).map(|i| format!("gref{i}")));
        h.extend(["frefx", "frefy", "frefz", "fnomx", "fnomy", "fnomz"].map(String::from));
        h.extend((1..=4 * self.n_uavs).map(|i| format!("u{i}")));
        h.push("feasible".into());
        h.push("wind".into());
        h
    }

    /// Header row, then one row per record. Numbers use Rust's shortest
    /// round-trip formatting, so equal logs give equal bytes.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.header().join(","))?;
        for r in &self.records {
            let mut row: Vec<String> = vec![r.t.to_string()];
            for v in [&r.position, &r.rpy, &r.velocity_w, &r.omega] {
                row.extend(v.iter().map(f64::to_string));
            }
            row.extend(r.gamma.iter().map(f64::to_string));
            row.extend(r.gamma_ref.iter().map(f64::to_string));
            row.extend(r.f_ref.iter().map(f64::to_string));
            row.extend(r.f_nom.iter().map(f64::to_string));
            row.extend(r.u.iter().map(f64::to_string));
            row.push(u8::from(r.feasible).to_string());
            row.push(u8::from(r.wind).to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_row_width() {
        let mut log = SimLog::new(4);
        log.push(LogRecord {
            t: 0.0,
            position: Vec3::zeros(),
            rpy: Vec3::zeros(),
            velocity_w: Vec3::zeros(),
            omega: Vec3::zeros(),
            gamma: vec![0.0; 4],
            gamma_ref: vec![0.0; 4],
            f_ref: Vec3::zeros(),
            f_nom: Vec3::zeros(),
            u: vec![1.5; 16],
            feasible: true,
            wind: false,
        });
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let head: Vec<_> = lines[0].split(',').collect();
        assert_eq!(head.len(), 13 + 8 + 6 + 16 + 2);
        assert_eq!(&head[..4], &["t", "px", "py", "pz"]);
        assert_eq!(head[13], "g1");
        assert_eq!(head[21], "frefx");
        assert_eq!(head.last(), Some(&"wind"));
        assert_eq!(lines[1].split(',').count(), head.len());
    }
}
