//! Regenerates `data/weather.csv` from the synthesizer.
//!
//! cargo run --example gen_weather > data/weather.csv

fn main() {
    let w = nearopt::model::Weather::synthesize(nearopt::model::BUNDLED_WEATHER_SEED);
    print!("{}", w.to_csv_string());
    eprintln!("pv mean {:.4} wind mean {:.4}", w.pv.mean(), w.wind.mean());
}
