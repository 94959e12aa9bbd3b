use hotspot::experiments::{initial_state, Monotonicity, SweepReport, SweepRow};
use hotspot::io::{format_diagnostics_csv, format_field, format_sweep_csv, parse_diagnostics_csv, parse_field, parse_sweep_csv};
use hotspot::parse_config;
use hotspot_core::diagnostics::records_for;
use hotspot_core::{DiagnosticsRecord, Field, Grid};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, Just(0.0), Just(-0.0), 1e-300f64..1e-290, Just(f64::MAX), Just(f64::MIN_POSITIVE)]
}

fn record() -> impl Strategy<Value = DiagnosticsRecord> {
    (prop::collection::vec(finite(), 16), prop::collection::vec(1.0f64..8.0, 1..4)).prop_map(|(x, ps)| {
        let pairs = |off: usize| ps.iter().enumerate().map(|(i, &p)| (p, x[(off + i) % 16])).collect::<Vec<_>>();
        DiagnosticsRecord {
            t: x[0],
            mass_u: x[1],
            mass_v: x[2],
            linf_u: x[3],
            linf_v: x[4],
            min_v: x[5],
            lp_v: pairs(6),
            grad_v_lq: x[7],
            int_u2: x[8],
            int_u2g: x[9],
            grad_vp2: pairs(10),
            grad_ln_u: x[11],
            cum_u2: x[12],
            cum_u2g: x[13],
            cum_grad_vp2: pairs(14),
            cum_grad_ln_u: x[15],
        }
    })
}

fn bits(r: &DiagnosticsRecord) -> String {
    format_diagnostics_csv(std::slice::from_ref(r))
}

proptest! {
    #[test]
    fn diagnostics_csv_round_trip(first in record(), n in 1usize..5) {
        let records: Vec<DiagnosticsRecord> = (0..n).map(|k| {
            let mut r = first.clone();
            r.t = first.t + k as f64;
            r
        }).collect();
        let text = format_diagnostics_csv(&records);
        let back = parse_diagnostics_csv(&text).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            prop_assert_eq!(bits(a), bits(b));
        }
        prop_assert_eq!(format_diagnostics_csv(&back), text);
    }

    #[test]
    fn field_round_trip(nx in 2usize..6, ny in 2usize..6, vals in prop::collection::vec(finite(), 36), t in finite()) {
        let g = Grid::new(nx, ny, 1.0, 0.3).unwrap();
        let f = Field::new(g, vals[..g.len()].to_vec()).unwrap();
        let (back, tb) = parse_field(&format_field(&f, t)).unwrap();
        prop_assert_eq!(tb.to_bits(), t.to_bits());
        let a: Vec<u64> = back.values.iter().map(|x| x.to_bits()).collect();
        let b: Vec<u64> = f.values.iter().map(|x| x.to_bits()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sweep_csv_round_trip(rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 0..5)) {
        let rows: Vec<SweepRow> = rows.iter().map(|r| SweepRow {
            eps_hi: r[0], eps_lo: r[1], d_lnu: r[2], d_v: r[3], d_gradv: r[4], d_u_lp: r[5],
        }).collect();
        let flags = Monotonicity { d_lnu: true, d_v: true, d_gradv: true, d_u_lp: true };
        let report = SweepReport {
            ladder: vec![], t_end: 1.0, rows: rows.clone(), failed: vec![], sup_u: vec![], monotone: flags, clamp_events: 0,
        };
        prop_assert_eq!(parse_sweep_csv(&format_sweep_csv(&report)).unwrap(), rows);
    }
}

#[test]
fn computed_records_round_trip() {
    let cfg = parse_config("nx = 6\nny = 6\ngamma = 0.5\n").unwrap();
    let s = initial_state(&cfg).unwrap();
    let mut s1 = s.clone();
    s1.t = 0.1;
    let records = records_for(&[s, s1], &cfg.params, &cfg.diagnostics).unwrap();
    let back = parse_diagnostics_csv(&format_diagnostics_csv(&records)).unwrap();
    assert_eq!(back, records);
    let header = format_diagnostics_csv(&records).lines().next().unwrap().to_string();
    assert!(header.contains("lp_v:2,lp_v:3,lp_v:5"), "{header}");
}

#[test]
fn malformed_diagnostics_rejected() {
    assert!(parse_diagnostics_csv("t,mass_u\n1,2\n").is_err());
    let cfg = parse_config("nx = 4\nny = 4").unwrap();
    let s = initial_state(&cfg).unwrap();
    let text = format_diagnostics_csv(&records_for(&[s], &cfg.params, &cfg.diagnostics).unwrap());
    let truncated: String = text.lines().next().unwrap().to_string() + "\n1,2,3\n";
    assert!(parse_diagnostics_csv(&truncated).is_err());
    assert!(parse_diagnostics_csv("").unwrap().is_empty());
}
