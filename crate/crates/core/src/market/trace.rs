//! Price trace files: `timestamp,datacenter,instance_type,price`, one row per
//! price change.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDateTime};

use super::prices::{PriceBook, PricePoint, PriceSeries};
use crate::des::SimTime;
use crate::error::{Error, Result};
use crate::money::Micros;

pub type MarketTraces = BTreeMap<(String, String), PriceSeries>;

/// Integer seconds, or ISO-8601 (with or without offset) converted to Unix
/// seconds.
pub fn parse_timestamp(field: &str) -> std::result::Result<SimTime, String> {
    let field = field.trim();
    if let Ok(secs) = field.parse::<u64>() {
        return Ok(secs);
    }
    let secs = if let Ok(dt) = DateTime::parse_from_rfc3339(field) {
        dt.timestamp()
    } else if let Ok(ndt) = NaiveDateTime::parse_from_str(field, "%Y-%m-%dT%H:%M:%S") {
        ndt.and_utc().timestamp()
    } else if let Ok(ndt) = NaiveDateTime::parse_from_str(field, "%Y-%m-%d %H:%M:%S") {
        ndt.and_utc().timestamp()
    } else {
        return Err(format!("`{field}` is neither integer seconds nor ISO-8601"));
    };
    u64::try_from(secs).map_err(|_| format!("`{field}` is before the Unix epoch"))
}

pub fn load_price_traces<R: Read>(source: R) -> Result<MarketTraces> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(source);
    let mut rows: BTreeMap<(String, String), Vec<(usize, PricePoint)>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(Error::parse(line, format!("expected 4 fields, found {}", record.len())));
        }
        if i == 0 && parse_timestamp(&record[0]).is_err() && record[0].parse::<f64>().is_err() {
            // header row
            continue;
        }
        let at = parse_timestamp(&record[0]).map_err(|m| Error::parse(line, m))?;
        let price: Micros = record[3].parse().map_err(|m: String| Error::parse(line, m))?;
        if !price.is_positive() {
            return Err(Error::parse(line, format!("price {} must be positive", &record[3])));
        }
        let key = (record[1].to_string(), record[2].to_string());
        if key.0.is_empty() || key.1.is_empty() {
            return Err(Error::parse(line, "empty datacenter or instance type"));
        }
        rows.entry(key).or_default().push((line, PricePoint { at, price }));
    }
    let mut out = MarketTraces::new();
    for (key, mut points) in rows {
        points.sort_by_key(|(_, p)| p.at);
        if let Some(w) = points.windows(2).find(|w| w[0].1.at == w[1].1.at) {
            return Err(Error::parse(
                w[1].0,
                format!("duplicate timestamp {} for {}/{}", w[1].1.at, key.0, key.1),
            ));
        }
        let series = PriceSeries::new(points.into_iter().map(|(_, p)| p).collect())?;
        out.insert(key, series);
    }
    if out.is_empty() {
        return Err(Error::Config("price trace contains no rows".into()));
    }
    Ok(out)
}

/// Writes the book in time order with a header row.
pub fn write_price_traces<W: Write>(book: &PriceBook, sink: W) -> Result<()> {
    let catalog = book.catalog();
    let mut rows: Vec<(SimTime, usize, &str, &str, Micros)> = vec![];
    for (i, (market, series)) in book.iter().enumerate() {
        let dc = catalog.datacenter(market.dc).id.as_str();
        let ty = catalog.instance_type(market.ty).name.as_str();
        rows.extend(series.points().iter().map(|p| (p.at, i, dc, ty, p.price)));
    }
    rows.sort_by_key(|r| (r.0, r.1));
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["timestamp", "datacenter", "instance_type", "price"])?;
    for (at, _, dc, ty, price) in rows {
        w.write_record([at.to_string(), dc.to_string(), ty.to_string(), price.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<price trace>", e))?;
    Ok(())
}
