//! SLIC-style superpixels on the luminance channel.
//!
//! Grid seeding, a fixed number of assignment/update rounds over (L, x, y)
//! and a final pass that folds disconnected fragments and undersized regions
//! into their largest neighbour. The result is a full, non-overlapping cover
//! of the image by 4-connected regions.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::imagecore::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    /// Spatial weight relative to luminance distance.
    pub compactness: f64,
    pub iterations: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            compactness: 10.0,
            iterations: 10,
        }
    }
}

/// Labelled partition of an image into superpixels.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
    centers: Vec<(usize, usize)>,
}

impl SuperpixelMap {
    /// Build a map from an explicit labelling. Labels must be `0..count`
    /// with every id used.
    pub fn from_labels(width: usize, height: usize, labels: Vec<usize>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "label grid of {} entries does not fit {width}x{height}",
                labels.len()
            )));
        }
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let mut members = vec![Vec::new(); count];
        for (idx, &lab) in labels.iter().enumerate() {
            members[lab].push(idx);
        }
        if let Some(empty) = members.iter().position(Vec::is_empty) {
            return Err(Error::InvalidInput(format!("superpixel {empty} has no pixels")));
        }
        let centers = members.iter().map(|m| nearest_to_centroid(m, width)).collect();
        Ok(Self {
            width,
            height,
            labels,
            members,
            centers,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_at(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x]
    }

    /// Row-major pixel indices of superpixel `id`, ascending.
    pub fn members(&self, id: usize) -> &[usize] {
        &self.members[id]
    }

    pub fn centers(&self) -> &[(usize, usize)] {
        &self.centers
    }

    /// Member pixel closest to the superpixel centroid; ties go to the
    /// smallest row-major index.
    pub fn central_pixel(&self, id: usize) -> Result<(usize, usize)> {
        self.centers
            .get(id)
            .copied()
            .ok_or(Error::SuperpixelOutOfRange {
                id,
                count: self.count(),
            })
    }

    /// Sorted 4-neighbour adjacency lists between superpixels.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![BTreeSet::new(); self.count()];
        for y in 0..self.height {
            for x in 0..self.width {
                let a = self.labels[y * self.width + x];
                if x + 1 < self.width {
                    let b = self.labels[y * self.width + x + 1];
                    if a != b {
                        sets[a].insert(b);
                        sets[b].insert(a);
                    }
                }
                if y + 1 < self.height {
                    let b = self.labels[(y + 1) * self.width + x];
                    if a != b {
                        sets[a].insert(b);
                        sets[b].insert(a);
                    }
                }
            }
        }
        sets.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// True when the members of `id` form one 4-connected component.
    pub fn is_connected(&self, id: usize) -> bool {
        let members = &self.members[id];
        let Some(&start) = members.first() else {
            return false;
        };
        let mut seen = vec![false; self.labels.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut reached = 0;
        while let Some(p) = stack.pop() {
            reached += 1;
            for q in neighbors4(p, self.width, self.height) {
                if !seen[q] && self.labels[q] == id {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        reached == members.len()
    }
}

fn nearest_to_centroid(members: &[usize], width: usize) -> (usize, usize) {
    let n = members.len() as f64;
    let (sx, sy) = members
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &p| (sx + (p % width) as f64, sy + (p / width) as f64));
    let (cx, cy) = (sx / n, sy / n);
    let mut best = members[0];
    let mut best_d = f64::INFINITY;
    for &p in members {
        let dx = (p % width) as f64 - cx;
        let dy = (p / width) as f64 - cy;
        let d = dx * dx + dy * dy;
        if d < best_d {
            best_d = d;
            best = p;
        }
    }
    (best % width, best / width)
}

fn neighbors4(p: usize, width: usize, height: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (p % width, p / width);
    let mut out = [usize::MAX; 4];
    if x > 0 {
        out[0] = p - 1;
    }
    if x + 1 < width {
        out[1] = p + 1;
    }
    if y > 0 {
        out[2] = p - width;
    }
    if y + 1 < height {
        out[3] = p + width;
    }
    out.into_iter().filter(|&q| q != usize::MAX)
}

pub fn segment(img: &GrayImage, target_size: usize) -> Result<SuperpixelMap> {
    segment_with(img, target_size, SlicParams::default())
}

pub fn segment_with(img: &GrayImage, target_size: usize, params: SlicParams) -> Result<SuperpixelMap> {
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return Err(Error::InvalidInput("image has zero width or height".into()));
    }
    if target_size == 0 {
        return Err(Error::InvalidInput("superpixel target size must be at least 1".into()));
    }
    let step = (target_size as f64).sqrt();
    let nx = ((w as f64 / step).round() as usize).max(1);
    let ny = ((h as f64 / step).round() as usize).max(1);
    let cell_w = w as f64 / nx as f64;
    let cell_h = h as f64 / ny as f64;
    let spatial_norm = (cell_w * cell_h).sqrt();
    let m2 = params.compactness * params.compactness / (spatial_norm * spatial_norm);

    // (L, x, y) per cluster; seeds sit at the pixel-centre of each grid cell.
    let mut centers: Vec<[f64; 3]> = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = (i as f64 + 0.5) * cell_w - 0.5;
            let y = (j as f64 + 0.5) * cell_h - 0.5;
            let l = img.get(x.round().clamp(0.0, (w - 1) as f64) as usize, y.round().clamp(0.0, (h - 1) as f64) as usize);
            centers.push([l, x, y]);
        }
    }
    let mut labels: Vec<usize> = (0..w * h)
        .map(|p| {
            let i = (((p % w) as f64 / cell_w) as usize).min(nx - 1);
            let j = (((p / w) as f64 / cell_h) as usize).min(ny - 1);
            j * nx + i
        })
        .collect();

    let lum = img.l();
    let mut dist = vec![f64::INFINITY; w * h];
    for _ in 0..params.iterations {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let x0 = (c[1] - cell_w).floor().max(0.0) as usize;
            let x1 = ((c[1] + cell_w).ceil() as usize).min(w - 1);
            let y0 = (c[2] - cell_h).floor().max(0.0) as usize;
            let y1 = ((c[2] + cell_h).ceil() as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = y * w + x;
                    let dl = lum[p] - c[0];
                    let dx = x as f64 - c[1];
                    let dy = y as f64 - c[2];
                    let d = dl * dl + (dx * dx + dy * dy) * m2;
                    if d < dist[p] {
                        dist[p] = d;
                        labels[p] = k;
                    }
                }
            }
        }
        let mut sums = vec![[0.0f64; 4]; centers.len()];
        for (p, &k) in labels.iter().enumerate() {
            let s = &mut sums[k];
            s[0] += lum[p];
            s[1] += (p % w) as f64;
            s[2] += (p / w) as f64;
            s[3] += 1.0;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s[3] > 0.0 {
                *c = [s[0] / s[3], s[1] / s[3], s[2] / s[3]];
            }
        }
    }

    let min_size = (target_size / 4).max(1);
    let merged = enforce_connectivity(&labels, w, h, min_size);
    SuperpixelMap::from_labels(w, h, merged)
}

/// Fold every fragment that is not the largest piece of its label, and every
/// region smaller than `min_size`, into its largest adjacent region. Returns
/// compact labels numbered in row-major order of first appearance.
fn enforce_connectivity(labels: &[usize], w: usize, h: usize, min_size: usize) -> Vec<usize> {
    let n = labels.len();
    // connected components of the raw labelling
    let mut comp = vec![usize::MAX; n];
    let mut comp_size = Vec::new();
    let mut comp_label = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comp_size.len();
        comp[start] = id;
        stack.push(start);
        let mut size = 0;
        while let Some(p) = stack.pop() {
            size += 1;
            for q in neighbors4(p, w, h) {
                if comp[q] == usize::MAX && labels[q] == labels[start] {
                    comp[q] = id;
                    stack.push(q);
                }
            }
        }
        comp_size.push(size);
        comp_label.push(labels[start]);
    }
    let ncomp = comp_size.len();

    let max_label = labels.iter().copied().max().unwrap_or(0);
    let mut largest: Vec<Option<usize>> = vec![None; max_label + 1];
    for c in 0..ncomp {
        let slot = &mut largest[comp_label[c]];
        match *slot {
            Some(b) if comp_size[b] >= comp_size[c] => {}
            _ => *slot = Some(c),
        }
    }
    let keep: Vec<bool> = (0..ncomp)
        .map(|c| largest[comp_label[c]] == Some(c) && comp_size[c] >= min_size)
        .collect();

    let mut adjacent = vec![BTreeSet::new(); ncomp];
    for p in 0..n {
        for q in neighbors4(p, w, h) {
            if comp[p] != comp[q] {
                adjacent[comp[p]].insert(comp[q]);
            }
        }
    }

    let mut parent: Vec<usize> = (0..ncomp).collect();
    let mut group_size = comp_size.clone();
    fn find(parent: &mut [usize], mut c: usize) -> usize {
        while parent[c] != c {
            parent[c] = parent[parent[c]];
            c = parent[c];
        }
        c
    }

    let mut orphans: Vec<usize> = (0..ncomp).filter(|&c| !keep[c]).collect();
    orphans.sort_by_key(|&c| (comp_size[c], c));
    for c in orphans {
        let root = find(&mut parent, c);
        let mut best: Option<(usize, usize)> = None;
        for &nb in &adjacent[c] {
            let r = find(&mut parent, nb);
            if r == root {
                continue;
            }
            let better = match best {
                None => true,
                Some((br, bs)) => group_size[r] > bs || (group_size[r] == bs && r < br),
            };
            if better {
                best = Some((r, group_size[r]));
            }
        }
        if let Some((target, _)) = best {
            parent[root] = target;
            group_size[target] += group_size[root];
        }
    }

    let mut remap = vec![usize::MAX; ncomp];
    let mut next = 0;
    let mut out = vec![0; n];
    for p in 0..n {
        let r = find(&mut parent, comp[p]);
        if remap[r] == usize::MAX {
            remap[r] = next;
            next += 1;
        }
        out[p] = remap[r];
    }
    out
}
