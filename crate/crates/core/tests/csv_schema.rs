//! Column layout and round-trip of every CSV table, as consumed by the plots.

use sirdi::ctmc::{run_logged, TimeSeries};
use sirdi::output::{
    write_arg_value, write_cycles, write_histogram, write_markers, write_path, write_report,
    write_time_series,
};
use sirdi::rng::replication_rng;
use sirdi::{
    delineate_outbreaks, run, simulate_cycles, simulate_thinned, EpidemicState, Model, ModelParams,
    Report, ReportRow, RunOptions,
};

fn params(kappa: f64) -> ModelParams<f64> {
    ModelParams::new(1e4, 1.0 / 75.0, 2.0, 50.0, kappa).unwrap()
}

/// Header and records of `bytes`, after checking the line endings.
fn parse(bytes: Vec<u8>) -> (Vec<String>, Vec<Vec<String>>) {
    let text = String::from_utf8(bytes).unwrap();
    assert!(!text.contains('\r'), "CR in output");
    assert!(text.ends_with('\n'), "missing final LF");
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect::<Vec<_>>();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect::<Vec<_>>())
        .collect::<Vec<_>>();
    for r in &rows {
        assert_eq!(r.len(), header.len());
    }
    (header, rows)
}

fn float(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn arg_value_table() {
    let rows = vec![(0.25, Some(1.0 / 3.0)), (0.5, None), (1.0, Some(0.0))];
    let mut buf = Vec::new();
    write_arg_value(&mut buf, &rows).unwrap();
    let (h, recs) = parse(buf);
    assert_eq!(h, ["arg", "value"]);
    assert_eq!(recs.len(), 3);
    assert_eq!(float(&recs[0][1]), 1.0 / 3.0);
    assert_eq!(recs[1][1], "");
    assert_eq!(recs[2][1], "0.0000000000000000e0");
}

#[test]
fn path_and_cycle_tables() {
    let m = Model::new(params(20.0)).unwrap();
    let p = simulate_thinned(&m, 0.5, 100.0, &mut replication_rng(1, 0)).unwrap();
    let samples = p.sample(0.01);
    let mut buf = Vec::new();
    write_path(&mut buf, &samples).unwrap();
    let (h, recs) = parse(buf);
    assert_eq!(h, ["t", "s"]);
    assert_eq!(recs.len(), samples.len());
    for (r, &(t, s)) in recs.iter().zip(&samples) {
        assert_eq!((float(&r[0]), float(&r[1])), (t, s));
    }

    let cycles = simulate_cycles(&m, 50, &mut replication_rng(1, 1)).unwrap();
    let mut buf = Vec::new();
    write_cycles(&mut buf, &cycles).unwrap();
    let (h, recs) = parse(buf);
    assert_eq!(h, ["t_jump", "x", "t_star"]);
    for (r, c) in recs.iter().zip(&cycles) {
        assert_eq!([float(&r[0]), float(&r[1]), float(&r[2])], [c.t_jump, c.x, c.t_star]);
    }
}

#[test]
fn chain_tables() {
    let p = params(20.0);
    let init = EpidemicState::from_fractions(p.n, 0.5, 0.0).unwrap();
    let mut ts = TimeSeries::new(0.5);
    run(&p, init, 50.0, &mut ts, &mut replication_rng(2, 0), RunOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_time_series(&mut buf, ts.rows()).unwrap();
    let (h, recs) = parse(buf);
    assert_eq!(h, ["t", "s", "i", "r", "n_total"]);
    assert_eq!(recs.len(), 100);
    for (r, row) in recs.iter().zip(ts.rows()) {
        assert_eq!(float(&r[0]), row.t);
        let counts: Vec<u64> = r[1..].iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(counts, [row.s, row.i, row.r, row.n_total]);
    }

    let (log, _) = run_logged(&p, init, 200.0, &mut replication_rng(3, 0), RunOptions::default()).unwrap();
    let markers = delineate_outbreaks(&log);
    assert!(!markers.is_empty());
    let mut buf = Vec::new();
    write_markers(&mut buf, &markers).unwrap();
    let (h, recs) = parse(buf);
    assert_eq!(h, ["k", "t_k", "u_k", "s_min", "s_max"]);
    for (r, m) in recs.iter().zip(&markers) {
        assert_eq!(r[0].parse::<usize>().unwrap(), m.k);
        assert_eq!(
            [float(&r[1]), float(&r[2]), float(&r[3]), float(&r[4])],
            [m.t_k, m.u_k, m.s_min, m.s_max]
        );
    }

    let mut buf = Vec::new();
    write_markers(&mut buf, &[]).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "k,t_k,u_k,s_min,s_max\n");
}

#[test]
fn histogram_table() {
    let m = Model::new(params(3.0)).unwrap();
    let h = m.binned_stationary(50);
    let mut buf = Vec::new();
    write_histogram(&mut buf, &h).unwrap();
    let (header, recs) = parse(buf);
    assert_eq!(header, ["bin_lo", "bin_hi", "mass"]);
    assert_eq!(recs.len(), 50);
    assert_eq!(float(&recs[0][0]), 0.0);
    assert_eq!(float(&recs[49][1]), 1.0);
    for w in recs.windows(2) {
        assert_eq!(w[0][1], w[1][0]);
    }
    let total: f64 = recs.iter().map(|r| float(&r[2])).sum();
    assert!((total - 1.0).abs() < 1e-8);
}

#[test]
fn report_table() {
    let report = Report {
        rows: vec![
            ReportRow {
                check: "with_ci".into(),
                n: 1e3,
                estimate: 0.5,
                ci_lo: Some(0.4),
                ci_hi: Some(0.6),
                target: 0.5,
                pass: true,
            },
            ReportRow {
                check: "trend".into(),
                n: 1e4,
                estimate: 0.1,
                ci_lo: None,
                ci_hi: None,
                target: 0.0,
                pass: false,
            },
        ],
    };
    let mut buf = Vec::new();
    write_report(&mut buf, &report).unwrap();
    let (h, recs) = parse(buf);
    assert_eq!(h, ["check", "n", "estimate", "ci_lo", "ci_hi", "target"]);
    assert_eq!(recs[0][0], "with_ci");
    assert_eq!(float(&recs[0][3]), 0.4);
    assert_eq!((recs[1][3].as_str(), recs[1][4].as_str()), ("", ""));
}
