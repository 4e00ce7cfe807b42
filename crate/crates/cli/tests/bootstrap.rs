use medsens::bounds::SensitivitySpec;
use medsens::oracle::sample_rng;
use medsens::prob::{Record, RecordTable};
use medsens_cli::bootstrap::{run_bootstrap, BootstrapConfig};
use medsens_cli::input::Dataset;
use rand::Rng;
use rayon::prelude::*;

fn config(replicates: usize, seed: u64) -> BootstrapConfig {
    BootstrapConfig {
        replicates,
        level: 0.95,
        seed,
        smoothing: 0.0,
        spec: SensitivitySpec::new(1.5, 2.0).unwrap(),
    }
}

#[test]
fn constant_data_collapses_intervals() {
    // Every unit has y = 1 and m = 0, so every resample estimates the same tables.
    let table = RecordTable::new(
        vec![
            Record {
                a: 0,
                m: 0,
                y: 1,
                c: 0,
                count: 40,
            },
            Record {
                a: 1,
                m: 0,
                y: 1,
                c: 0,
                count: 60,
            },
        ],
        1,
        1,
    )
    .unwrap();
    let summary = run_bootstrap(&table, &config(200, 3)).unwrap();
    for s in &summary.strata {
        for i in &s.intervals {
            assert_eq!(i.lower, i.estimate, "{}", i.quantity);
            assert_eq!(i.upper, i.estimate, "{}", i.quantity);
        }
    }
}

#[test]
fn fixed_seed_repeats() {
    let data = Dataset::from_bytes(
        b"a,m,y,c,count\n0,0,1,0,20\n0,0,0,0,40\n0,1,1,0,15\n0,1,0,0,25\n1,0,1,0,30\n1,0,0,0,20\n1,1,1,0,35\n1,1,0,0,15\n",
        0.0,
        false,
    )
    .unwrap();
    let a = run_bootstrap(&data.table, &config(300, 9)).unwrap();
    let b = run_bootstrap(&data.table, &config(300, 9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn degenerate_cells_are_redrawn() {
    // The single exposed unit with m = 1 is often missing from a resample.
    let data = Dataset::from_bytes(
        b"a,m,y,c,count\n0,0,1,0,20\n0,0,0,0,20\n0,1,1,0,1\n0,1,0,0,1\n1,0,1,0,15\n1,0,0,0,15\n1,1,1,0,1\n1,1,0,0,1\n",
        0.0,
        false,
    )
    .unwrap();
    let summary = run_bootstrap(&data.table, &config(200, 1)).unwrap();
    assert!(summary.redraws > 0);
}

// Generating distribution: pr(a=1) = 0.5, pr(m=1|a) and pr(y=1|a,m).
const PR_M: [f64; 2] = [0.3, 0.6];
const PR_Y: [[f64; 2]; 2] = [[0.2, 0.4], [0.3, 0.6]];

fn cell_probs() -> Vec<(u8, u8, u8, f64)> {
    let mut out = Vec::new();
    for a in 0..2u8 {
        for m in 0..2u8 {
            let pm = if m == 1 {
                PR_M[a as usize]
            } else {
                1.0 - PR_M[a as usize]
            };
            for y in 0..2u8 {
                let py = PR_Y[a as usize][m as usize];
                out.push((a, m, y, 0.5 * pm * if y == 1 { py } else { 1.0 - py }));
            }
        }
    }
    out
}

fn draw_table(seed: u64, index: u64, n: u64) -> RecordTable {
    let cells = cell_probs();
    let mut rng = sample_rng(seed, index);
    let mut counts = vec![0u64; cells.len()];
    for _ in 0..n {
        let mut u: f64 = rng.gen();
        let mut k = 0;
        while k + 1 < cells.len() && u >= cells[k].3 {
            u -= cells[k].3;
            k += 1;
        }
        counts[k] += 1;
    }
    let rows = cells
        .iter()
        .zip(counts)
        .filter(|(_, n)| *n > 0)
        .map(|(&(a, m, y, _), count)| Record {
            a,
            m: m.into(),
            y,
            c: 0,
            count,
        })
        .collect();
    RecordTable::new(rows, 2, 1).unwrap()
}

#[test]
fn percentile_intervals_cover_truth() {
    let true_nde = {
        let y1m0 = PR_Y[1][0] * (1.0 - PR_M[0]) + PR_Y[1][1] * PR_M[0];
        let y0m0 = PR_Y[0][0] * (1.0 - PR_M[0]) + PR_Y[0][1] * PR_M[0];
        y1m0 / y0m0
    };
    let metas = 200u64;
    let covered: u64 = (0..metas)
        .into_par_iter()
        .map(|i| {
            let table = draw_table(77, i, 3000);
            let summary = run_bootstrap(&table, &config(400, 1000 + i)).unwrap();
            let nde = summary.strata[0]
                .intervals
                .iter()
                .find(|iv| iv.quantity == "nde_rr")
                .unwrap();
            u64::from(nde.lower <= true_nde && true_nde <= nde.upper)
        })
        .sum();
    let rate = covered as f64 / metas as f64;
    assert!((0.90..=0.99).contains(&rate), "coverage {rate}");
}
