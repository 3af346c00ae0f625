use std::time::Instant;

use num_rational::BigRational;
use thermolanczos::exact::rat;
use thermolanczos::series::table::{evaluate_block, partition_table, sort_terms, table_to_json};
use thermolanczos::series::{lanczos_taylor, table1_transcription, Which};

#[test]
fn generated_table_matches_the_published_blocks() {
    let start = Instant::now();
    let generated = partition_table(4).unwrap();
    let mut published = table1_transcription();
    sort_terms(&mut published);
    let mut subset: Vec<_> = generated
        .into_iter()
        .filter(|t| !(t.which == Which::A && t.n == 4))
        .collect();
    sort_terms(&mut subset);
    assert_eq!(table_to_json(&subset), table_to_json(&published));
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn higher_blocks_reproduce_the_numeric_series() {
    let c: Vec<BigRational> = (1..=15).map(|k| rat((k * k) % 7 + 1, k + 1)).collect();
    let series = lanczos_taylor(&c, 6).unwrap();
    let table = partition_table(6).unwrap();
    let c2 = &c[1];
    let mut fact = vec![BigRational::from_integer(1.into())];
    for k in 1..=8i64 {
        let next = &fact[k as usize - 1] * BigRational::from_integer(k.into());
        fact.push(next);
    }
    for n in 0..=6usize {
        let block: Vec<_> = table.iter().filter(|t| t.n == n && t.which == Which::A).cloned().collect();
        let lhs = &fact[n + 1] * &fact[n + 1] * num_traits::pow(c2.clone(), 3 * n + 1) * &series.a[n];
        assert_eq!(lhs, evaluate_block(&block, &c), "A({n})");
        if n >= 1 {
            let block: Vec<_> =
                table.iter().filter(|t| t.n == n && t.which == Which::B).cloned().collect();
            let lhs = &fact[n + 1] * &fact[n] * num_traits::pow(c2.clone(), 3 * n - 1) * &series.b[n];
            assert_eq!(lhs, evaluate_block(&block, &c), "B({n})");
        }
    }
}
