//! Loading a two-day minute-resolution recording from disk and coarsening it.

use std::fmt::Write as _;

use causal_ts::panel::{load_panel, resample, LoadSchema};
use chrono::{Duration, TimeZone, Utc};

/// Minute `m` of the recording; `None` for dropped sensor rows.
fn pm25(m: usize) -> Option<f64> {
    // window 40 missing entirely, 8 of 15 rows of window 46 missing
    match m {
        600..615 => None,
        692..700 => None,
        _ => Some((m % 97) as f64 * 0.5 + (m / 60) as f64),
    }
}

#[test]
fn two_days_at_one_minute_resample_to_192_rows() {
    let start = Utc.with_ymd_and_hms(2021, 5, 1, 8, 0, 0).unwrap();
    let mut text = String::from("timestamp,pm2_5,br\n");
    for m in 0..2880 {
        if let Some(v) = pm25(m) {
            let ts = (start + Duration::minutes(m as i64)).format("%Y-%m-%dT%H:%M:%SZ");
            writeln!(text, "{ts},{v},{}", 12 + m % 5).unwrap();
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("subject07.csv");
    std::fs::write(&path, text).unwrap();

    let panel = load_panel(&path, &LoadSchema::new(60)).unwrap();
    assert_eq!(panel.subject_id(), "subject07");
    assert_eq!(panel.len(), 2880);
    assert_eq!(panel.missing_count(), 2 * (15 + 8));

    let coarse = resample(&panel, 900).unwrap();
    assert_eq!(coarse.len(), 192);
    assert_eq!(coarse.resolution_seconds(), 900);
    for w in 0..192 {
        let seen: Vec<f64> = (15 * w..15 * w + 15).filter_map(pm25).collect();
        let want = (2 * seen.len() >= 15).then(|| seen.iter().sum::<f64>() / seen.len() as f64);
        match (coarse.value(w, 0), want) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12, "window {w}: {a} vs {b}"),
            (a, b) => assert_eq!(a, b, "window {w}"),
        }
    }
    // window 40 is fully missing; window 46 keeps 7 of 15 rows
    assert_eq!(coarse.value(40, 0), None);
    assert_eq!(coarse.value(46, 0), None);
}
