//! Synthetic CSV files shaped like the public COMPAS and IIT-JEE extracts.

use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;

pub const COMPAS_ROWS: usize = 7_214;
pub const COMPAS_AFRICAN_AMERICAN: usize = 3_701;
/// Rows with a blank `c_days_from_compas`; ingestion must drop them.
pub const COMPAS_BROKEN_ROWS: usize = 25;

pub const JEE_ROWS: usize = 384_977;
pub const JEE_FEMALE: usize = 98_169;
pub const JEE_ABSENT_ROWS: usize = 40;

pub fn write_compas(path: &Path, seed: u64) -> std::io::Result<()> {
    let mut rng = super::rng(seed);
    let mut races: Vec<&str> = Vec::with_capacity(COMPAS_ROWS);
    races.extend(std::iter::repeat_n("African-American", COMPAS_AFRICAN_AMERICAN));
    for (label, count) in [("Hispanic", 637), ("Other", 377), ("Asian", 32), ("Native American", 18)] {
        races.extend(std::iter::repeat_n(label, count));
    }
    races.resize(COMPAS_ROWS, "Caucasian");
    races.shuffle(&mut rng);

    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "id,sex,age,race,juv_fel_count,juv_misd_count,juv_other_count,priors_count,c_jail_in,c_jail_out,c_days_from_compas,start,end"
    )?;
    let base = NaiveDate::from_ymd_opt(2013, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let mut write_row = |out: &mut dyn Write, id: usize, race: &str, broken: bool| -> std::io::Result<()> {
        let jail_in = base + Duration::minutes(rng.random_range(0..2 * 365 * 24 * 60));
        let jail_out = jail_in + Duration::minutes(rng.random_range(60..60 * 24 * 120));
        let days = if broken { String::new() } else { rng.random_range(0..1200).to_string() };
        writeln!(
            out,
            "{id},{},{},{race},{},{},{},{},{},{},{days},{},{}",
            if rng.random_bool(0.8) { "Male" } else { "Female" },
            rng.random_range(18..70),
            rng.random_range(0..3),
            rng.random_range(0..3),
            rng.random_range(0..4),
            rng.random_range(0..30),
            jail_in.format("%Y-%m-%d %H:%M:%S"),
            jail_out.format("%Y-%m-%d %H:%M:%S"),
            rng.random_range(0..100),
            rng.random_range(100..1200),
        )
    };
    let mut id = 1;
    for race in &races {
        write_row(&mut out, id, race, false)?;
        id += 1;
    }
    for _ in 0..COMPAS_BROKEN_ROWS {
        write_row(&mut out, id, "African-American", true)?;
        id += 1;
    }
    out.flush()
}

pub fn write_jee(path: &Path, seed: u64) -> std::io::Result<()> {
    let mut rng = super::rng(seed);
    let mut female: Vec<bool> = (0..JEE_ROWS).map(|i| i < JEE_FEMALE).collect();
    female.shuffle(&mut rng);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "math,phys,chem,gender")?;
    for f in female {
        writeln!(
            out,
            "{},{},{},{}",
            rng.random_range(-35..=160),
            rng.random_range(-35..=160),
            rng.random_range(-35..=160),
            if f { "Female" } else { "Male" }
        )?;
    }
    for _ in 0..JEE_ABSENT_ROWS {
        writeln!(out, "{},AB,{},Female", rng.random_range(0..100), rng.random_range(0..100))?;
    }
    out.flush()
}
