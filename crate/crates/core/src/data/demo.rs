//! Deterministic synthetic dataset standing in for site measurements.

use std::f64::consts::PI;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HistoricalDay;

pub const DEMO_START_DATE: (i32, u32, u32) = (2021, 1, 1);

const STEPS: usize = 24;

/// Hourly demo days starting on 2021-01-01.
///
/// PV follows a seasonal daylight bell scaled by a daily cloudiness draw,
/// truck charging is heavy on weekdays (overnight and evening returns, a
/// midday top-up) and light on weekends, with evening peaks that regularly
/// exceed what the default grid connection can deliver, and prices carry morning and evening
/// peaks, a winter premium and a midday solar dip. Prices stay strictly
/// positive.
pub fn make_demo_dataset(seed: u64, n_days: usize) -> Vec<HistoricalDay> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (y, m, d) = DEMO_START_DATE;
    let start = NaiveDate::from_ymd_opt(y, m, d).expect("valid start date");
    (0..n_days)
        .map(|i| {
            let date = start + Days::new(i as u64);
            demo_day(&mut rng, date)
        })
        .collect()
}

fn bump(h: f64, centre: f64, width: f64) -> f64 {
    (-((h - centre) / width).powi(2)).exp()
}

fn demo_day(rng: &mut ChaCha8Rng, date: NaiveDate) -> HistoricalDay {
    let doy = f64::from(date.ordinal());
    // +1 at midsummer, -1 at midwinter.
    let season = (2.0 * PI * (doy - 172.0) / 365.0).cos();
    let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);

    let daylight = 12.0 + 4.0 * season;
    let sunrise = 12.0 - daylight / 2.0;
    let clearness: f64 = rng.gen_range(0.3..1.0);
    let pv_peak = (0.55 + 0.25 * season) * clearness;

    let activity = if weekend { 0.3 } else { 1.0 };
    let price_level: f64 = rng.gen_range(-12.0..12.0);

    let mut day = HistoricalDay {
        date,
        price: Vec::with_capacity(STEPS),
        demand_ch: Vec::with_capacity(STEPS),
        demand_wh: Vec::with_capacity(STEPS),
        pv_cf: Vec::with_capacity(STEPS),
    };
    for k in 0..STEPS {
        let h = k as f64 + 0.5;

        let phase = (h - sunrise) / daylight;
        let sun = if (0.0..=1.0).contains(&phase) {
            (PI * phase).sin()
        } else {
            0.0
        };
        let cf = pv_peak * sun * rng.gen_range(0.9..1.1);
        day.pv_cf.push(cf.clamp(0.0, 1.0));

        let ch = activity
            * (1.4 * bump(h, 2.5, 2.5) + 0.9 * bump(h, 13.0, 1.2) + 2.9 * bump(h, 20.5, 1.6))
            * rng.gen_range(0.85..1.15);
        day.demand_ch.push(ch.max(0.0));

        let working = !weekend && (7.0..18.0).contains(&h);
        let wh = if working {
            0.4
        } else if weekend {
            0.12
        } else {
            0.15
        } - 0.05 * season.min(0.0);
        day.demand_wh.push(wh * rng.gen_range(0.95..1.05));

        let eur_per_mwh = 70.0 - 25.0 * season + price_level + 30.0 * bump(h, 8.0, 1.5) + 40.0 * bump(h, 19.0, 2.0)
            - 20.0 * (0.5 + 0.5 * season) * sun
            + rng.gen_range(-8.0..8.0);
        day.price.push(eur_per_mwh.max(5.0) / 1000.0);
    }
    day
}
