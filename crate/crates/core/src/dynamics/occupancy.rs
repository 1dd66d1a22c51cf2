//! Grid histogram of a reference trajectory projection.
//!
//! A point landing in a visited cell scores 0; otherwise it scores the
//! Chebyshev distance, in cells, to the nearest visited cell.

use std::collections::VecDeque;
use std::io::{Read, Write};

use super::{project, DelayVectors, DynamicsError};

const MIN_TRAINING_POINTS: usize = 100;
const MAGIC: &[u8; 6] = b"FDOCC\0";
const FORMAT_VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyModel {
    pub axes: Vec<usize>,
    pub resolution: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Row-major cell counts, first axis slowest.
    pub counts: Vec<u64>,
    /// Embedding the model was fit on.
    pub embed_dim: usize,
    pub delay: usize,
    distance: Vec<u32>,
}

pub fn fit_occupancy(
    vectors: &DelayVectors,
    axes: &[usize],
    resolution: &[usize],
) -> Result<OccupancyModel, DynamicsError> {
    let points = project(vectors, axes)?;
    if resolution.len() != axes.len() {
        return Err(DynamicsError::InvalidParameter(format!(
            "{} resolutions for {} axes",
            resolution.len(),
            axes.len()
        )));
    }
    if resolution.iter().any(|&r| r < 2) {
        return Err(DynamicsError::InvalidParameter(
            "grid resolution must be at least 2 per axis".into(),
        ));
    }
    if points.len() < MIN_TRAINING_POINTS {
        return Err(DynamicsError::InsufficientData {
            what: "training points",
            needed: MIN_TRAINING_POINTS,
            available: points.len(),
        });
    }
    let k = axes.len();
    let mut lower = vec![f64::INFINITY; k];
    let mut upper = vec![f64::NEG_INFINITY; k];
    for p in &points {
        for a in 0..k {
            lower[a] = lower[a].min(p[a]);
            upper[a] = upper[a].max(p[a]);
        }
    }
    let cells: usize = resolution.iter().product();
    let mut model = OccupancyModel {
        axes: axes.to_vec(),
        resolution: resolution.to_vec(),
        lower,
        upper,
        counts: vec![0; cells],
        embed_dim: vectors.dim,
        delay: vectors.delay,
        distance: Vec::new(),
    };
    for p in &points {
        let idx = model.flat_index(&model.cell_of(p));
        model.counts[idx] += 1;
    }
    model.distance = model.distance_field();
    Ok(model)
}

/// Novelty of one projected point (coordinates in model axis order).
pub fn novelty_score(model: &OccupancyModel, point: &[f64]) -> Result<u32, DynamicsError> {
    if point.len() != model.axes.len() {
        return Err(DynamicsError::ShapeMismatch {
            expected: model.axes.len(),
            got: point.len(),
        });
    }
    Ok(model.distance[model.flat_index(&model.cell_of(point))])
}

impl OccupancyModel {
    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn occupied_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn occupied_fraction(&self) -> f64 {
        self.occupied_cells() as f64 / self.counts.len() as f64
    }

    fn cell_width(&self, axis: usize) -> f64 {
        let w = (self.upper[axis] - self.lower[axis]) / self.resolution[axis] as f64;
        if w > 0.0 {
            w
        } else {
            1.0
        }
    }

    /// Cell coordinates of a point, clamped onto the grid.
    pub fn cell_of(&self, point: &[f64]) -> Vec<usize> {
        (0..self.axes.len())
            .map(|a| {
                let raw = ((point[a] - self.lower[a]) / self.cell_width(a)).floor();
                let max = (self.resolution[a] - 1) as f64;
                raw.clamp(0.0, max) as usize
            })
            .collect()
    }

    pub fn flat_index(&self, cell: &[usize]) -> usize {
        cell.iter()
            .zip(&self.resolution)
            .fold(0, |acc, (&c, &r)| acc * r + c)
    }

    fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let mut cell = vec![0; self.resolution.len()];
        for a in (0..cell.len()).rev() {
            cell[a] = idx % self.resolution[a];
            idx /= self.resolution[a];
        }
        cell
    }

    pub fn count_at(&self, cell: &[usize]) -> u64 {
        self.counts[self.flat_index(cell)]
    }

    // Multi-source BFS with king moves yields exact Chebyshev distances.
    fn distance_field(&self) -> Vec<u32> {
        let n = self.counts.len();
        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for (i, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                dist[i] = 0;
                queue.push_back(i);
            }
        }
        let k = self.resolution.len();
        let offsets: Vec<Vec<i64>> = (0..3usize.pow(k as u32))
            .map(|mut code| {
                (0..k)
                    .map(|_| {
                        let o = (code % 3) as i64 - 1;
                        code /= 3;
                        o
                    })
                    .collect()
            })
            .filter(|o: &Vec<i64>| o.iter().any(|&x| x != 0))
            .collect();
        while let Some(i) = queue.pop_front() {
            let cell = self.unflatten(i);
            'next: for off in &offsets {
                let mut nb = Vec::with_capacity(k);
                for a in 0..k {
                    let c = cell[a] as i64 + off[a];
                    if c < 0 || c >= self.resolution[a] as i64 {
                        continue 'next;
                    }
                    nb.push(c as usize);
                }
                let j = self.flat_index(&nb);
                if dist[j] == u32::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    /// Versioned little-endian binary encoding.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&[self.axes.len() as u8])?;
        for &a in &self.axes {
            w.write_all(&(a as u32).to_le_bytes())?;
        }
        for &r in &self.resolution {
            w.write_all(&(r as u32).to_le_bytes())?;
        }
        for v in self.lower.iter().chain(&self.upper) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.embed_dim as u32).to_le_bytes())?;
        w.write_all(&(self.delay as u32).to_le_bytes())?;
        w.write_all(&(self.counts.len() as u64).to_le_bytes())?;
        for &c in &self.counts {
            w.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<OccupancyModel, DynamicsError> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)
            .map_err(|e| DynamicsError::ModelFormat(e.to_string()))?;
        let mut cur = Cursor { buf: &buf, pos: 0 };
        if cur.take(MAGIC.len())? != MAGIC {
            return Err(DynamicsError::ModelFormat("bad magic".into()));
        }
        let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(DynamicsError::ModelFormat(format!("unsupported version {version}")));
        }
        let k = cur.take(1)?[0] as usize;
        if !(2..=3).contains(&k) {
            return Err(DynamicsError::ModelFormat(format!("{k} axes")));
        }
        let axes = (0..k).map(|_| cur.u32().map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
        let resolution = (0..k).map(|_| cur.u32().map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
        let lower = (0..k).map(|_| cur.f64()).collect::<Result<Vec<_>, _>>()?;
        let upper = (0..k).map(|_| cur.f64()).collect::<Result<Vec<_>, _>>()?;
        let embed_dim = cur.u32()? as usize;
        let delay = cur.u32()? as usize;
        let cells = u64::from_le_bytes(cur.take(8)?.try_into().unwrap()) as usize;
        if resolution.iter().any(|&r| r < 2) || cells != resolution.iter().product::<usize>() {
            return Err(DynamicsError::ModelFormat("cell count does not match resolution".into()));
        }
        let counts = (0..cells)
            .map(|_| cur.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap())))
            .collect::<Result<Vec<_>, _>>()?;
        if cur.pos != buf.len() {
            return Err(DynamicsError::ModelFormat("trailing bytes".into()));
        }
        let mut model = OccupancyModel {
            axes,
            resolution,
            lower,
            upper,
            counts,
            embed_dim,
            delay,
            distance: Vec::new(),
        };
        model.distance = model.distance_field();
        Ok(model)
    }

    /// Cell dump: one row per cell, `c0,c1[,c2],count`.
    pub fn write_cells_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.axes.len()).map(|a| format!("c{a}")).collect();
        header.push("count".into());
        out.write_record(&header)?;
        for (i, &c) in self.counts.iter().enumerate() {
            let mut row: Vec<String> = self.unflatten(i).iter().map(|v| v.to_string()).collect();
            row.push(c.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DynamicsError> {
        let end = self.pos + n;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| DynamicsError::ModelFormat("unexpected end of file".into()))?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DynamicsError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, DynamicsError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
