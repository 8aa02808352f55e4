//! Regenerates `fixtures/synthetic_prices.csv`:
//!
//! ```sh
//! cargo run -p marketrmt --example make_fixture > crates/core/fixtures/synthetic_prices.csv
//! ```
//!
//! Twelve synthetic markets from 2006-06-02 to 2011-07-29 on weekdays. Returns
//! load on a common market factor (volatility doubled from 2007-12-03 to
//! 2009-06-30) and on a second factor with alternating loadings, five of
//! which change sign during that period. Cells are closed at random, some
//! dates close most markets, and `SYN12` starts trading a week late.

use chrono::NaiveDate;
use marketrmt::rmt::SplitMix64;
use marketrmt::synthetic::business_days;

const N: usize = 12;

fn main() {
    let start = NaiveDate::from_ymd_opt(2006, 6, 2).unwrap();
    let end = NaiveDate::from_ymd_opt(2011, 7, 29).unwrap();
    let crisis = (
        NaiveDate::from_ymd_opt(2007, 12, 3).unwrap(),
        NaiveDate::from_ymd_opt(2009, 6, 30).unwrap(),
    );
    let dates: Vec<NaiveDate> = business_days(start, 1400).into_iter().filter(|d| *d <= end).collect();

    let mut rng = SplitMix64::new(20_081_115);
    let market_beta: Vec<f64> = (0..N).map(|i| 0.6 + 0.04 * i as f64).collect();
    let second_beta: Vec<f64> = (0..N).map(|i| if i % 2 == 0 { 0.7 } else { -0.7 }).collect();
    let flipped_in_crisis = [1, 4, 6, 9, 10];

    let mut log_price: Vec<f64> = (0..N).map(|i| (1000.0 + 250.0 * i as f64).ln()).collect();
    println!(
        "date,{}",
        (1..=N).map(|i| format!("SYN{i:02}")).collect::<Vec<_>>().join(",")
    );
    for (t, date) in dates.iter().enumerate() {
        let in_crisis = crisis.0 <= *date && *date <= crisis.1;
        let market = rng.next_normal() * if in_crisis { 0.02 } else { 0.01 };
        let second = rng.next_normal() * 0.008;
        let mut cells = Vec::with_capacity(N);
        let mass_closure = rng.next_f64() < 0.02;
        for i in 0..N {
            let mut b2 = second_beta[i];
            if in_crisis && flipped_in_crisis.contains(&i) {
                b2 = -b2;
            }
            let noise = rng.next_normal() * 0.02;
            log_price[i] += market_beta[i] * market + b2 * second + noise;
            let closed = (mass_closure && i % 2 == 0)
                || rng.next_f64() < 0.03
                || (i == N - 1 && t < 5);
            cells.push(if closed {
                String::new()
            } else {
                format!("{:.4}", log_price[i].exp())
            });
        }
        println!("{},{}", date.format("%Y-%m-%d"), cells.join(","));
    }
}
