//! Environments from taxi-trip tables: pickups are binned into a lat/lon
//! grid, busy cells become arms with a passenger-count pmf, and vehicles
//! placed in the cells' bounding box become plays rewarded by proximity.

use std::collections::BTreeMap;
use std::io::Read;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, Environment, ProbingCost, ResourcePmf};

pub const DEFAULT_CELL_SIZE: f64 = 0.01;
pub const DEFAULT_D_MAX_CAP: usize = 7;
pub const FOUR_LEVELS: [f64; 4] = [0.1, 0.4, 0.7, 1.0];

/// Guards `floor` against representation error on exact bin edges.
const BIN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub latitude: String,
    pub longitude: String,
    pub passengers: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            latitude: "pickup_latitude".into(),
            longitude: "pickup_longitude".into(),
            passengers: "passenger_count".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub pickup_lat: f64,
    pub pickup_lon: f64,
    pub passenger_count: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TripTable {
    pub records: Vec<TripRecord>,
    pub dropped: usize,
}

/// Reads trips, dropping rows with unusable coordinates or counts.
pub fn parse_trips<R: Read>(input: R, columns: &ColumnMap) -> Result<TripTable> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (lat_col, lon_col, pax_col) = (find(&columns.latitude)?, find(&columns.longitude)?, find(&columns.passengers)?);
    let mut table = TripTable::default();
    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(_) => {
                table.dropped += 1;
                continue;
            }
        };
        let coord = |i: usize| row.get(i).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite());
        let pax = row.get(pax_col).and_then(parse_count);
        match (coord(lat_col), coord(lon_col), pax) {
            (Some(pickup_lat), Some(pickup_lon), Some(passenger_count)) => {
                table.records.push(TripRecord { pickup_lat, pickup_lon, passenger_count })
            }
            _ => table.dropped += 1,
        }
    }
    Ok(table)
}

fn parse_count(s: &str) -> Option<u32> {
    if let Ok(n) = s.parse::<u32>() {
        return (n >= 1).then_some(n);
    }
    let v = s.parse::<f64>().ok()?;
    (v.is_finite() && v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64).then_some(v as u32)
}

pub fn bin_index(coord: f64, cell_size: f64) -> i64 {
    (coord / cell_size + BIN_EPS).floor() as i64
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub lat_bin: i64,
    pub lon_bin: i64,
    pub count: usize,
    pub pmf: ResourcePmf,
    pub centroid_lat: f64,
    pub centroid_lon: f64,
}

/// Groups records by grid cell, ordered by `(lat_bin, lon_bin)`.
pub fn build_grid(records: &[TripRecord], cell_size: f64, d_max_cap: usize) -> Result<Vec<GridCell>> {
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(Error::InvalidExperiment(format!("cell size must be positive, got {cell_size}")));
    }
    if d_max_cap == 0 {
        return Err(Error::InvalidExperiment("passenger cap must be at least 1".into()));
    }
    struct Acc {
        counts: Vec<usize>,
        lat: f64,
        lon: f64,
    }
    let mut cells: BTreeMap<(i64, i64), Acc> = BTreeMap::new();
    for r in records {
        let key = (bin_index(r.pickup_lat, cell_size), bin_index(r.pickup_lon, cell_size));
        let acc = cells.entry(key).or_insert_with(|| Acc { counts: vec![0; d_max_cap], lat: 0.0, lon: 0.0 });
        let d = (r.passenger_count as usize).clamp(1, d_max_cap);
        acc.counts[d - 1] += 1;
        acc.lat += r.pickup_lat;
        acc.lon += r.pickup_lon;
    }
    cells
        .into_iter()
        .map(|((lat_bin, lon_bin), acc)| {
            let count: usize = acc.counts.iter().sum();
            let pmf = ResourcePmf::new(acc.counts.iter().map(|&c| c as f64 / count as f64).collect())?;
            Ok(GridCell {
                lat_bin,
                lon_bin,
                count,
                pmf,
                centroid_lat: acc.lat / count as f64,
                centroid_lon: acc.lon / count as f64,
            })
        })
        .collect()
}

/// The `arms` busiest cells; ties go to the smaller grid key.
pub fn top_cells(cells: &[GridCell], arms: usize) -> Result<Vec<GridCell>> {
    if cells.len() < arms {
        return Err(Error::NotEnoughCells { needed: arms, available: cells.len() });
    }
    let mut ranked: Vec<&GridCell> = cells.iter().collect();
    ranked.sort_by(|a, b| b.count.cmp(&a.count).then((a.lat_bin, a.lon_bin).cmp(&(b.lat_bin, b.lon_bin))));
    Ok(ranked.into_iter().take(arms).cloned().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardModel {
    Bernoulli,
    FourLevel,
}

/// Distribution on [`FOUR_LEVELS`] with mean `mu`, mixing the two levels
/// that bracket it. The flag is set when `mu` lies below the lowest level
/// and the result is clamped to a point mass there.
pub fn four_level(mu: f64) -> (DiscreteDistribution, bool) {
    let support = FOUR_LEVELS.to_vec();
    let mut probs = vec![0.0; 4];
    let mut clamped = false;
    if mu <= FOUR_LEVELS[0] {
        probs[0] = 1.0;
        clamped = mu < FOUR_LEVELS[0];
    } else if mu >= FOUR_LEVELS[3] {
        probs[3] = 1.0;
    } else {
        let i = FOUR_LEVELS.windows(2).position(|w| mu <= w[1]).expect("mu below the top level");
        let w = (mu - FOUR_LEVELS[i]) / (FOUR_LEVELS[i + 1] - FOUR_LEVELS[i]);
        probs[i] = 1.0 - w;
        probs[i + 1] = w;
    }
    (DiscreteDistribution::new(support, probs).expect("two-point mixture on fixed levels"), clamped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridKey {
    pub lat_bin: i64,
    pub lon_bin: i64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub records: usize,
    pub dropped: usize,
    pub cells: usize,
    pub arms: Vec<GridKey>,
    /// `(lat, lon)` in degrees.
    pub vehicles: Vec<(f64, f64)>,
    pub max_distance: f64,
    pub clamped_means: usize,
}

#[derive(Debug, Clone)]
pub struct BuiltEnvironment {
    pub env: Environment,
    pub vehicles: Vec<(f64, f64)>,
    pub max_distance: f64,
    /// Four-level targets clamped up to the lowest level.
    pub clamped_means: usize,
}

/// Environment over `cells`, with `plays` vehicles drawn uniformly from the
/// cells' bounding box. `mu = 1 - d / d_max` for the Manhattan distance `d`
/// in grid units between a vehicle and a cell centre.
pub fn build_environment<R: Rng + ?Sized>(
    cells: &[GridCell],
    plays: usize,
    cell_size: f64,
    reward_model: RewardModel,
    probing_cost: ProbingCost,
    rng: &mut R,
) -> Result<BuiltEnvironment> {
    if cells.is_empty() || plays == 0 {
        return Err(Error::InvalidEnvironment("need at least one cell and one vehicle".into()));
    }
    let lat_lo = cells.iter().map(|c| c.lat_bin).min().unwrap() as f64 * cell_size;
    let lat_hi = (cells.iter().map(|c| c.lat_bin).max().unwrap() + 1) as f64 * cell_size;
    let lon_lo = cells.iter().map(|c| c.lon_bin).min().unwrap() as f64 * cell_size;
    let lon_hi = (cells.iter().map(|c| c.lon_bin).max().unwrap() + 1) as f64 * cell_size;
    let vehicles: Vec<(f64, f64)> =
        (0..plays).map(|_| (rng.gen_range(lat_lo..lat_hi), rng.gen_range(lon_lo..lon_hi))).collect();

    let distance = |c: &GridCell, v: &(f64, f64)| {
        ((c.lat_bin as f64 + 0.5) - v.0 / cell_size).abs() + ((c.lon_bin as f64 + 0.5) - v.1 / cell_size).abs()
    };
    let dist: Vec<Vec<f64>> = cells.iter().map(|c| vehicles.iter().map(|v| distance(c, v)).collect()).collect();
    let max_distance = dist.iter().flatten().copied().fold(0.0, f64::max);

    let mut clamped_means = 0;
    let mut rewards = Vec::with_capacity(cells.len());
    for row in &dist {
        let mut arm = Vec::with_capacity(plays);
        for &d in row {
            let mu = if max_distance > 0.0 { (1.0 - d / max_distance).clamp(0.0, 1.0) } else { 1.0 };
            arm.push(match reward_model {
                RewardModel::Bernoulli => DiscreteDistribution::bernoulli(mu)?,
                RewardModel::FourLevel => {
                    let (dist, clamped) = four_level(mu);
                    clamped_means += clamped as usize;
                    dist
                }
            });
        }
        rewards.push(arm);
    }
    let pmfs = cells.iter().map(|c| c.pmf.clone()).collect();
    let env = Environment::new(pmfs, rewards, probing_cost)?;
    Ok(BuiltEnvironment { env, vehicles, max_distance, clamped_means })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestParams {
    pub columns: ColumnMap,
    pub arms: usize,
    pub plays: usize,
    pub cell_size: f64,
    pub d_max_cap: usize,
    pub reward_model: RewardModel,
    pub alpha: Vec<f64>,
}

impl Default for IngestParams {
    fn default() -> Self {
        Self {
            columns: ColumnMap::default(),
            arms: 3,
            plays: 2,
            cell_size: DEFAULT_CELL_SIZE,
            d_max_cap: DEFAULT_D_MAX_CAP,
            reward_model: RewardModel::Bernoulli,
            alpha: vec![0.0, 0.1, 1.0],
        }
    }
}

/// Full pipeline from a trip table to an environment.
pub fn ingest<R: Read, G: Rng + ?Sized>(input: R, params: &IngestParams, rng: &mut G) -> Result<(Environment, IngestReport)> {
    let probing_cost = ProbingCost::new(params.alpha.clone())?;
    let table = parse_trips(input, &params.columns)?;
    let grid = build_grid(&table.records, params.cell_size, params.d_max_cap)?;
    let selected = top_cells(&grid, params.arms)?;
    let built = build_environment(&selected, params.plays, params.cell_size, params.reward_model, probing_cost, rng)?;
    let report = IngestReport {
        records: table.records.len(),
        dropped: table.dropped,
        cells: grid.len(),
        arms: selected.iter().map(|c| GridKey { lat_bin: c.lat_bin, lon_bin: c.lon_bin, count: c.count }).collect(),
        vehicles: built.vehicles,
        max_distance: built.max_distance,
        clamped_means: built.clamped_means,
    };
    Ok((built.env, report))
}
