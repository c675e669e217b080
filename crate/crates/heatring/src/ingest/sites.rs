//! Site registry CSV: one facility per row with coordinates and the month
//! operations started. Columns are matched by header name, so column order
//! is free; `provider` is optional.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{IngestError, SitesError};
use crate::grid::GeoPoint;
use crate::timeline::MonthKey;

#[derive(Debug, Clone, PartialEq)]
pub struct SiteRecord {
    pub site_id: String,
    pub point: GeoPoint,
    pub start_of_operations: MonthKey,
    pub provider: Option<String>,
}

/// Parses a sites CSV document. Must never panic on arbitrary input.
pub fn parse_sites(text: &str) -> Result<Vec<SiteRecord>, SitesError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    let find = |name: &'static str| -> Result<usize, SitesError> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or(SitesError::MissingColumn(name))
    };
    let id_col = find("site_id")?;
    let lat_col = find("lat_deg")?;
    let lon_col = find("lon_deg")?;
    let start_col = find("start_of_operations")?;
    let provider_col = headers.iter().position(|h| h.eq_ignore_ascii_case("provider"));

    let mut seen = HashSet::new();
    let mut sites = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");

        let site_id = field(id_col).to_string();
        if site_id.is_empty() {
            return Err(SitesError::EmptySiteId { line });
        }
        if !seen.insert(site_id.clone()) {
            return Err(SitesError::DuplicateSiteId { line, id: site_id });
        }

        let number = |name: &'static str, i: usize| -> Result<f64, SitesError> {
            field(i)
                .parse::<f64>()
                .map_err(|_| SitesError::BadNumber { line, field: name, token: field(i).to_string() })
        };
        let lat = number("lat_deg", lat_col)?;
        let lon = number("lon_deg", lon_col)?;
        let point = GeoPoint::new(lat, lon).map_err(|_| {
            // Name the axis that broke: latitude checked first.
            if !(-90.0..=90.0).contains(&lat) || !lat.is_finite() {
                SitesError::CoordinateRange { line, field: "lat_deg", value: lat }
            } else {
                SitesError::CoordinateRange { line, field: "lon_deg", value: lon }
            }
        })?;

        let start: MonthKey = field(start_col)
            .parse()
            .map_err(|_| SitesError::BadDate { line, value: field(start_col).to_string() })?;

        let provider = provider_col
            .map(|i| field(i))
            .filter(|p| !p.is_empty())
            .map(str::to_string);

        sites.push(SiteRecord { site_id, point, start_of_operations: start, provider });
    }
    Ok(sites)
}

pub fn write_sites(sites: &[SiteRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["site_id", "lat_deg", "lon_deg", "start_of_operations", "provider"])
        .expect("write to vec");
    for s in sites {
        w.write_record([
            s.site_id.as_str(),
            &s.point.lat_deg.to_string(),
            &s.point.lon_deg.to_string(),
            &s.start_of_operations.to_string(),
            s.provider.as_deref().unwrap_or(""),
        ])
        .expect("write to vec");
    }
    String::from_utf8(w.into_inner().expect("flush to vec")).expect("csv is utf-8")
}

pub fn load_sites(path: &Path) -> Result<Vec<SiteRecord>, IngestError> {
    let text = fs::read_to_string(path)
        .map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse_sites(&text)
        .map_err(|source| IngestError::SitesCsv { path: path.to_path_buf(), source })
}

pub fn save_sites(path: &Path, sites: &[SiteRecord]) -> Result<(), IngestError> {
    fs::write(path, write_sites(sites))
        .map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}
