//! Moore-neighbor boundary tracing with Jacob's stopping criterion.
//!
//! Each positive id is traced independently over its 8-connected foreground,
//! so touching instances may share boundary pixels. Pixel `(col, row)` maps to
//! point `(col + 0.5, -(row + 0.5))`. Traced contours wind clockwise in that
//! y-up frame (negative shoelace area), the same convention preprocessing
//! enforces.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{Contour, LabelMap};
use crate::error::{Error, Result};
use crate::Point;

/// Regions with fewer pixels are skipped with a warning.
pub const MIN_REGION_PIXELS: usize = 4;

// Clockwise on screen (rows grow downward), starting west.
const OFFSETS: [(isize, isize); 8] = [(0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1)];

pub fn trace_contours(map: &LabelMap) -> Result<Vec<Contour>> {
    if map.labels().len() != map.width() * map.height() {
        return Err(Error::MalformedMap("label count does not match dimensions".into()));
    }
    // id -> (first pixel in raster order, pixel count)
    let mut regions: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (i, &id) in map.labels().iter().enumerate() {
        if id > 0 {
            regions.entry(id).or_insert((i, 0)).1 += 1;
        }
    }
    if regions.is_empty() {
        return Err(Error::EmptyMap);
    }
    let jobs: Vec<(u32, usize)> = regions
        .into_iter()
        .filter_map(|(id, (start, count))| {
            if count < MIN_REGION_PIXELS {
                log::warn!("skipping instance {id}: {count} px is below the {MIN_REGION_PIXELS} px minimum");
                None
            } else {
                Some((id, start))
            }
        })
        .collect();
    let traced: Vec<Option<Contour>> = jobs
        .par_iter()
        .map(|&(id, start)| {
            let pixels = trace_region(map, id, start);
            let pts: Vec<Point> = pixels
                .into_iter()
                .map(|(r, c)| [c as f64 + 0.5, -(r as f64 + 0.5)])
                .collect();
            match Contour::new(i64::from(id), pts, None) {
                Ok(c) => Some(c),
                Err(e) => {
                    log::warn!("skipping instance {id}: {e}");
                    None
                }
            }
        })
        .collect();
    Ok(traced.into_iter().flatten().collect())
}

/// Boundary pixels `(row, col)` of the region containing `start`, which must
/// be the first pixel of `id` in raster order (so its west neighbor is
/// background).
fn trace_region(map: &LabelMap, id: u32, start: usize) -> Vec<(usize, usize)> {
    let (w, h) = (map.width() as isize, map.height() as isize);
    let fg = |r: isize, c: isize| r >= 0 && c >= 0 && r < h && c < w && map.get(r as usize, c as usize) == id;
    let s = ((start / map.width()) as isize, (start % map.width()) as isize);

    // One Moore step from pixel `p` whose backtrack neighbor sits in
    // direction `b`. Returns the next boundary pixel and the direction (seen
    // from it) of the background pixel examined just before it.
    let step = |p: (isize, isize), b: usize| -> Option<((isize, isize), usize)> {
        for k in 1..=8 {
            let d = (b + k) % 8;
            let q = (p.0 + OFFSETS[d].0, p.1 + OFFSETS[d].1);
            if fg(q.0, q.1) {
                let prev = (b + k - 1) % 8;
                let back = (p.0 + OFFSETS[prev].0, p.1 + OFFSETS[prev].1);
                let dir = OFFSETS
                    .iter()
                    .position(|&(dr, dc)| (q.0 + dr, q.1 + dc) == back)
                    .expect("backtrack pixel neighbors the new pixel");
                return Some((q, dir));
            }
        }
        None
    };

    let mut out = vec![(s.0 as usize, s.1 as usize)];
    let Some(first) = step(s, 0) else {
        return out;
    };
    let mut state = first;
    // Jacob's criterion: stop once the start pixel is about to be left the
    // same way it was left the first time.
    let limit = 4 * (map.width() * map.height()) + 8;
    for _ in 0..limit {
        if state.0 == s && step(s, state.1) == Some(first) {
            break;
        }
        out.push((state.0 .0 as usize, state.0 .1 as usize));
        state = match step(state.0, state.1) {
            Some(next) => next,
            None => break,
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::signed_area;

    fn map_from(rows: &[&[u32]]) -> LabelMap {
        let w = rows[0].len();
        LabelMap::new(w, rows.len(), rows.concat()).unwrap()
    }

    #[test]
    fn square_boundary_has_eight_pixels() {
        let m = map_from(&[
            &[0, 0, 0, 0, 0],
            &[0, 1, 1, 1, 0],
            &[0, 1, 1, 1, 0],
            &[0, 1, 1, 1, 0],
            &[0, 0, 0, 0, 0],
        ]);
        let cs = trace_contours(&m).unwrap();
        assert_eq!(cs.len(), 1);
        let c = &cs[0];
        assert_eq!(c.id, 1);
        assert_eq!(
            c.points,
            vec![
                [1.5, -1.5],
                [2.5, -1.5],
                [3.5, -1.5],
                [3.5, -2.5],
                [3.5, -3.5],
                [2.5, -3.5],
                [1.5, -3.5],
                [1.5, -2.5]
            ]
        );
        // clockwise in the y-up frame
        assert!(signed_area(&c.points) < 0.0);
    }

    #[test]
    fn disjoint_blobs_keep_ids_and_small_regions_are_skipped() {
        let m = map_from(&[&[2, 2, 0, 0, 0, 7], &[2, 2, 0, 1, 1, 0], &[0, 0, 0, 1, 1, 0]]);
        let cs = trace_contours(&m).unwrap();
        let ids: Vec<i64> = cs.iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![1, 2]);
    }

    #[test]
    fn empty_map_is_an_error() {
        let m = LabelMap::new(3, 3, vec![0; 9]).unwrap();
        assert!(matches!(trace_contours(&m), Err(Error::EmptyMap)));
    }

    #[test]
    fn thin_diagonal_shape_terminates() {
        // a one-pixel-wide L plus diagonal tail revisits pixels
        let m = map_from(&[&[1, 0, 0, 0], &[1, 0, 0, 0], &[1, 1, 1, 0], &[0, 0, 0, 1]]);
        let cs = trace_contours(&m).unwrap();
        assert_eq!(cs.len(), 1);
        assert!(cs[0].points.len() >= 6);
    }
}
