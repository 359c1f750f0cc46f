//! Incremental constrained Delaunay triangulation with Ruppert-style
//! quality refinement.

use std::collections::{HashMap, VecDeque};

use crate::geometry::predicates::{incircle, orient2d};
use crate::Point;

pub(crate) const NONE: usize = usize::MAX;
pub(crate) const OUTSIDE: u8 = u8::MAX;
const SIZE_FACTOR: f64 = 0.75;

type Key = (usize, usize);

fn key(a: usize, b: usize) -> Key {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

enum Walk {
    Inside(usize),
    Blocked(Key),
    Failed,
}

struct Cavity {
    tris: Vec<usize>,
    /// `(a, b, owner, outside)`, with `a -> b` counterclockwise for the owner.
    boundary: Vec<(usize, usize, usize, usize)>,
}

/// Refinement parameters.
pub(crate) struct Quality<'a> {
    pub min_angle_deg: f64,
    pub size: &'a dyn Fn(Point) -> f64,
    pub min_segment: f64,
    pub max_vertices: usize,
}

pub(crate) struct Triangulation {
    pub pts: Vec<Point>,
    pub tri: Vec<[usize; 3]>,
    pub nb: Vec<[usize; 3]>,
    pub alive: Vec<bool>,
    pub region: Vec<u8>,
    /// Constrained edges and their labels.
    pub segs: HashMap<Key, u8>,
    free: Vec<usize>,
    v2t: Vec<usize>,
    last: usize,
    stamp: Vec<u32>,
    epoch: u32,
    rng: u64,
}

impl Triangulation {
    /// Empty triangulation whose super-triangle encloses the disk `B(center, radius)`.
    pub fn new(center: Point, radius: f64) -> Self {
        let r = 20.0 * radius.max(1.0e-6);
        let pts: Vec<Point> = [90.0f64, 210.0, 330.0]
            .iter()
            .map(|deg| center + Point::from_polar(r, deg.to_radians()))
            .collect();
        Self {
            pts,
            tri: vec![[0, 1, 2]],
            nb: vec![[NONE; 3]],
            alive: vec![true],
            region: vec![OUTSIDE],
            segs: HashMap::new(),
            free: Vec::new(),
            v2t: vec![0, 0, 0],
            last: 0,
            stamp: vec![0],
            epoch: 0,
            rng: 0x9e37_79b9_7f4a_7c15,
        }
    }

    pub fn is_super(&self, v: usize) -> bool {
        v < 3
    }

    fn next_rand(&mut self) -> usize {
        self.rng ^= self.rng << 13;
        self.rng ^= self.rng >> 7;
        self.rng ^= self.rng << 17;
        (self.rng >> 33) as usize
    }

    fn edge(&self, t: usize, k: usize) -> (usize, usize) {
        let v = self.tri[t];
        (v[(k + 1) % 3], v[(k + 2) % 3])
    }

    pub fn is_segment(&self, a: usize, b: usize) -> bool {
        self.segs.contains_key(&key(a, b))
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.tri[t];
        (self.pts[a] + self.pts[b] + self.pts[c]) * (1.0 / 3.0)
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tri[t];
        0.5 * (self.pts[b] - self.pts[a]).cross(self.pts[c] - self.pts[a])
    }

    fn circumcenter(&self, t: usize) -> Point {
        let [a, b, c] = self.tri[t];
        let (pa, pb, pc) = (self.pts[a], self.pts[b], self.pts[c]);
        let (bx, by) = (pb.x - pa.x, pb.y - pa.y);
        let (cx, cy) = (pc.x - pa.x, pc.y - pa.y);
        let d = 2.0 * (bx * cy - by * cx);
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        Point::new(pa.x + (cy * b2 - by * c2) / d, pa.y + (bx * c2 - cx * b2) / d)
    }

    fn push_tri(&mut self, v: [usize; 3], n: [usize; 3], region: u8) -> usize {
        if let Some(t) = self.free.pop() {
            self.tri[t] = v;
            self.nb[t] = n;
            self.alive[t] = true;
            self.region[t] = region;
            t
        } else {
            self.tri.push(v);
            self.nb.push(n);
            self.alive.push(true);
            self.region.push(region);
            self.stamp.push(0);
            self.tri.len() - 1
        }
    }

    fn start_tri(&self) -> usize {
        if self.last < self.tri.len() && self.alive[self.last] {
            return self.last;
        }
        self.alive.iter().position(|&a| a).unwrap_or(0)
    }

    /// Visibility walk to a triangle containing `p` (closed).
    fn locate(&mut self, p: Point) -> Option<usize> {
        let mut t = self.start_tri();
        let guard = 4 * self.tri.len() + 64;
        for _ in 0..guard {
            let off = self.next_rand() % 3;
            let mut moved = false;
            for j in 0..3 {
                let k = (off + j) % 3;
                let (a, b) = self.edge(t, k);
                if orient2d(self.pts[a], self.pts[b], p) < 0.0 {
                    let n = self.nb[t][k];
                    if n == NONE {
                        return None;
                    }
                    t = n;
                    moved = true;
                    break;
                }
            }
            if !moved {
                self.last = t;
                return Some(t);
            }
        }
        None
    }

    /// Straight-line walk from the centroid of `t0` towards `p`, refusing to
    /// cross constrained edges.
    fn walk_to(&mut self, t0: usize, p: Point) -> Walk {
        let g = self.centroid(t0);
        let mut t = t0;
        let mut came = NONE;
        let guard = 4 * self.tri.len() + 64;
        for _ in 0..guard {
            let mut exit = None;
            let mut fallback = None;
            let mut on_seg = None;
            for k in 0..3 {
                let (a, b) = self.edge(t, k);
                let (pa, pb) = (self.pts[a], self.pts[b]);
                let o = orient2d(pa, pb, p);
                if o == 0.0 && self.is_segment(a, b) {
                    on_seg = Some(key(a, b));
                }
                if o < 0.0 {
                    if fallback.is_none() {
                        fallback = Some(k);
                    }
                    let oa = orient2d(g, p, pa);
                    let ob = orient2d(g, p, pb);
                    if ((oa >= 0.0 && ob <= 0.0) || (oa <= 0.0 && ob >= 0.0))
                        && self.nb[t][k] != came
                        && exit.is_none()
                    {
                        exit = Some(k);
                    }
                }
            }
            let Some(k) = exit.or(fallback) else {
                return match on_seg {
                    Some(s) => Walk::Blocked(s),
                    None => Walk::Inside(t),
                };
            };
            let (a, b) = self.edge(t, k);
            if self.is_segment(a, b) {
                return Walk::Blocked(key(a, b));
            }
            let n = self.nb[t][k];
            if n == NONE {
                return Walk::Failed;
            }
            came = t;
            t = n;
        }
        Walk::Failed
    }

    /// The two triangles sharing edge `(a, b)`; the first has `a -> b` counterclockwise.
    fn edge_tris(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        let start = self.v2t[a];
        if start == NONE || !self.alive[start] {
            return None;
        }
        for dir in [2usize, 1] {
            let mut t = start;
            for _ in 0..4096 {
                let i = self.tri[t].iter().position(|&v| v == a)?;
                if self.tri[t][(i + 1) % 3] == b {
                    return Some((t, self.nb[t][(i + 2) % 3]));
                }
                if self.tri[t][(i + 2) % 3] == b {
                    return Some((self.nb[t][(i + 1) % 3], t));
                }
                let n = self.nb[t][(i + dir) % 3];
                if n == NONE || n == start {
                    break;
                }
                t = n;
            }
        }
        None
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_tris(a, b).is_some()
    }

    fn mark(&mut self, t: usize) {
        self.stamp[t] = self.epoch;
    }

    fn marked(&self, t: usize) -> bool {
        self.stamp[t] == self.epoch
    }

    fn cavity(&mut self, p: Point, starts: &[usize], split: Option<Key>) -> Option<Cavity> {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = u32::MAX);
            self.epoch = 1;
        }
        let mut cav: Vec<usize> = starts.to_vec();
        for &t in starts {
            self.mark(t);
        }
        let mut i = 0;
        while i < cav.len() {
            let t = cav[i];
            i += 1;
            for k in 0..3 {
                let n = self.nb[t][k];
                if n == NONE || self.marked(n) {
                    continue;
                }
                let (a, b) = self.edge(t, k);
                let kk = key(a, b);
                if self.segs.contains_key(&kk) && Some(kk) != split {
                    continue;
                }
                let [x, y, z] = self.tri[n];
                if incircle(self.pts[x], self.pts[y], self.pts[z], p) > 0.0 {
                    self.mark(n);
                    cav.push(n);
                }
            }
        }
        loop {
            let mut boundary = Vec::new();
            let mut bad = None;
            for &t in &cav {
                for k in 0..3 {
                    let n = self.nb[t][k];
                    if n != NONE && self.marked(n) {
                        continue;
                    }
                    let (a, b) = self.edge(t, k);
                    if orient2d(self.pts[a], self.pts[b], p) <= 0.0 {
                        bad = Some(t);
                    }
                    boundary.push((a, b, t, n));
                }
            }
            let Some(b) = bad else {
                let mut on_boundary: Vec<usize> = boundary.iter().flat_map(|e| [e.0, e.1]).collect();
                on_boundary.sort_unstable();
                on_boundary.dedup();
                for &t in &cav {
                    for v in self.tri[t] {
                        if on_boundary.binary_search(&v).is_err() {
                            return None;
                        }
                    }
                }
                return Some(Cavity { tris: cav, boundary });
            };
            if starts.contains(&b) {
                return None;
            }
            // Drop the offending triangle and anything no longer connected to the start.
            self.epoch = self.epoch.wrapping_add(1);
            let keep: Vec<usize> = cav.into_iter().filter(|&t| t != b).collect();
            let in_keep = |t: usize, keep: &[usize]| keep.contains(&t);
            let mut conn: Vec<usize> = starts.to_vec();
            for &t in starts {
                self.mark(t);
            }
            let mut j = 0;
            while j < conn.len() {
                let t = conn[j];
                j += 1;
                for k in 0..3 {
                    let n = self.nb[t][k];
                    if n == NONE || self.marked(n) || !in_keep(n, &keep) {
                        continue;
                    }
                    let (x, y) = self.edge(t, k);
                    let kk = key(x, y);
                    if self.segs.contains_key(&kk) && Some(kk) != split {
                        continue;
                    }
                    self.mark(n);
                    conn.push(n);
                }
            }
            cav = conn;
        }
    }

    fn commit(&mut self, pi: usize, cav: Cavity) -> Vec<usize> {
        let regions: Vec<u8> = cav.boundary.iter().map(|e| self.region[e.2]).collect();
        for &t in &cav.tris {
            self.alive[t] = false;
            self.free.push(t);
        }
        let mut created = Vec::with_capacity(cav.boundary.len());
        for (&(a, b, _, out), &reg) in cav.boundary.iter().zip(&regions) {
            let t = self.push_tri([a, b, pi], [NONE, NONE, out], reg);
            if out != NONE {
                let k = (0..3)
                    .find(|&k| self.tri[out][k] != a && self.tri[out][k] != b)
                    .expect("neighbour shares the edge");
                self.nb[out][k] = t;
            }
            self.v2t[a] = t;
            self.v2t[b] = t;
            created.push(t);
        }
        for &t in &created {
            let [a, b, _] = self.tri[t];
            let next = created.iter().copied().find(|&s| self.tri[s][0] == b);
            let prev = created.iter().copied().find(|&s| self.tri[s][1] == a);
            self.nb[t][0] = next.unwrap_or(NONE);
            self.nb[t][1] = prev.unwrap_or(NONE);
        }
        self.v2t[pi] = created[0];
        self.last = created[0];
        created
    }

    /// Insert `p`, optionally splitting the constrained edge `split` on which it lies.
    fn insert(&mut self, p: Point, start: usize, split: Option<Key>) -> Option<(usize, Vec<usize>)> {
        let starts = match split {
            Some((a, b)) => {
                let (t1, t2) = self.edge_tris(a, b)?;
                if t1 == NONE || t2 == NONE {
                    return None;
                }
                vec![t1, t2]
            }
            None => vec![start],
        };
        let cav = self.cavity(p, &starts, split)?;
        let pi = self.pts.len();
        self.pts.push(p);
        self.v2t.push(NONE);
        if let Some((a, b)) = split {
            let label = self.segs.remove(&key(a, b)).unwrap_or(0);
            self.segs.insert(key(a, pi), label);
            self.segs.insert(key(pi, b), label);
        }
        let created = self.commit(pi, cav);
        Some((pi, created))
    }

    /// Insert a free point, returning its index (or the index of a coincident vertex).
    pub fn insert_point(&mut self, p: Point) -> Option<usize> {
        let t = self.locate(p)?;
        for v in self.tri[t] {
            if self.pts[v] == p {
                return Some(v);
            }
        }
        self.insert(p, t, None).map(|(i, _)| i)
    }

    /// Make every input segment a union of triangulation edges by midpoint splitting.
    pub fn conform(&mut self, segments: &[(usize, usize, u8)], min_len: f64) -> Result<(), String> {
        let mut stack: Vec<(usize, usize, u8)> = segments.iter().rev().copied().collect();
        while let Some((a, b, label)) = stack.pop() {
            if self.has_edge(a, b) {
                self.segs.insert(key(a, b), label);
                continue;
            }
            let (pa, pb) = (self.pts[a], self.pts[b]);
            if pa.dist(pb) < min_len {
                return Err(format!(
                    "boundary segment near ({:.4}, {:.4}) cannot be recovered",
                    pa.x, pa.y
                ));
            }
            let m = (pa + pb) * 0.5;
            let mi = self
                .insert_point(m)
                .ok_or_else(|| format!("failed to insert boundary point ({}, {})", m.x, m.y))?;
            stack.push((mi, b, label));
            stack.push((a, mi, label));
        }
        Ok(())
    }

    /// Assign a region tag to each connected component of triangles
    /// separated by constrained edges.
    pub fn flood_regions(&mut self, classify: impl Fn(Point) -> u8) {
        let n = self.tri.len();
        let mut done = vec![false; n];
        for s in 0..n {
            if !self.alive[s] || done[s] {
                continue;
            }
            let mut comp = vec![s];
            done[s] = true;
            let mut i = 0;
            let mut touches_super = false;
            while i < comp.len() {
                let t = comp[i];
                i += 1;
                if self.tri[t].iter().any(|&v| self.is_super(v)) {
                    touches_super = true;
                }
                for k in 0..3 {
                    let nt = self.nb[t][k];
                    if nt == NONE || done[nt] {
                        continue;
                    }
                    let (a, b) = self.edge(t, k);
                    if self.is_segment(a, b) {
                        continue;
                    }
                    done[nt] = true;
                    comp.push(nt);
                }
            }
            let tag = if touches_super {
                OUTSIDE
            } else {
                let rep = comp
                    .iter()
                    .copied()
                    .max_by(|&x, &y| self.area(x).total_cmp(&self.area(y)))
                    .unwrap();
                classify(self.centroid(rep))
            };
            for t in comp {
                self.region[t] = tag;
            }
        }
    }

    fn encroached(&self, s: Key) -> bool {
        let Some((t1, t2)) = self.edge_tris(s.0, s.1) else {
            return false;
        };
        let (pa, pb) = (self.pts[s.0], self.pts[s.1]);
        [t1, t2].iter().any(|&t| {
            if t == NONE {
                return false;
            }
            self.tri[t].iter().any(|&v| {
                v != s.0 && v != s.1 && !self.is_super(v) && {
                    let pv = self.pts[v];
                    (pa - pv).dot(pb - pv) < 0.0
                }
            })
        })
    }

    fn is_bad(&self, t: usize, q: &Quality) -> bool {
        if self.region[t] == OUTSIDE {
            return false;
        }
        let [a, b, c] = self.tri[t];
        let (pa, pb, pc) = (self.pts[a], self.pts[b], self.pts[c]);
        let la = pb.dist(pc);
        let lb = pa.dist(pc);
        let lc = pa.dist(pb);
        let area = 0.5 * (pb - pa).cross(pc - pa);
        if area <= 0.0 {
            return false;
        }
        let circ = la * lb * lc / (4.0 * area);
        let lmin = la.min(lb).min(lc);
        let sin_min = lmin / (2.0 * circ);
        if sin_min < q.min_angle_deg.to_radians().sin() && lmin > q.min_segment {
            return true;
        }
        circ > (q.size)(self.centroid(t)) * SIZE_FACTOR
    }

    fn split_segment(&mut self, s: Key, q: &Quality) -> Option<(usize, Vec<usize>)> {
        let (pa, pb) = (self.pts[s.0], self.pts[s.1]);
        if pa.dist(pb) < 2.0 * q.min_segment {
            return None;
        }
        let m = (pa + pb) * 0.5;
        self.insert(m, NONE, Some(s))
    }

    fn after_insert(
        &self,
        pi: usize,
        created: &[usize],
        segq: &mut VecDeque<Key>,
        triq: &mut VecDeque<(usize, [usize; 3])>,
    ) {
        for &t in created {
            triq.push_back((t, self.tri[t]));
            let (a, b) = self.edge(t, 2);
            if self.is_segment(a, b) {
                segq.push_back(key(a, b));
            }
            for (x, y) in [(self.tri[t][0], pi), (self.tri[t][1], pi)] {
                if self.is_segment(x, y) {
                    segq.push_back(key(x, y));
                }
            }
        }
    }

    /// Refine until no triangle outside the `OUTSIDE` region is skinny or too large.
    pub fn refine(&mut self, q: &Quality) -> Result<(), String> {
        let mut segq: VecDeque<Key> = {
            let mut v: Vec<Key> = self.segs.keys().copied().collect();
            v.sort_unstable();
            v.into()
        };
        let mut triq: VecDeque<(usize, [usize; 3])> = (0..self.tri.len())
            .filter(|&t| self.alive[t])
            .map(|t| (t, self.tri[t]))
            .collect();
        loop {
            if self.pts.len() > q.max_vertices {
                return Err(format!(
                    "mesh refinement exceeded {} vertices; increase h or reduce corner grading",
                    q.max_vertices
                ));
            }
            if let Some(s) = segq.pop_front() {
                if self.segs.contains_key(&s) && self.encroached(s) {
                    if let Some((pi, created)) = self.split_segment(s, q) {
                        self.after_insert(pi, &created, &mut segq, &mut triq);
                    }
                }
                continue;
            }
            let Some((t, verts)) = triq.pop_front() else {
                break;
            };
            if !self.alive[t] || self.tri[t] != verts || !self.is_bad(t, q) {
                continue;
            }
            let c = self.circumcenter(t);
            if !c.is_finite() {
                continue;
            }
            match self.walk_to(t, c) {
                Walk::Blocked(s) => {
                    if let Some((pi, created)) = self.split_segment(s, q) {
                        self.after_insert(pi, &created, &mut segq, &mut triq);
                    }
                }
                Walk::Failed => {}
                Walk::Inside(tc) => {
                    if self.region[tc] == OUTSIDE {
                        continue;
                    }
                    if self.tri[tc].iter().any(|&v| self.pts[v].dist(c) < q.min_segment) {
                        continue;
                    }
                    let Some(cav) = self.cavity(c, &[tc], None) else {
                        continue;
                    };
                    let encroached: Vec<Key> = cav
                        .boundary
                        .iter()
                        .filter(|e| self.is_segment(e.0, e.1))
                        .filter(|e| {
                            let (pa, pb) = (self.pts[e.0], self.pts[e.1]);
                            (pa - c).dot(pb - c) < 0.0
                        })
                        .map(|e| key(e.0, e.1))
                        .collect();
                    if !encroached.is_empty() {
                        let mut any = false;
                        for s in encroached {
                            if let Some((pi, created)) = self.split_segment(s, q) {
                                self.after_insert(pi, &created, &mut segq, &mut triq);
                                any = true;
                            }
                        }
                        if any {
                            triq.push_back((t, verts));
                        }
                        continue;
                    }
                    let pi = self.pts.len();
                    self.pts.push(c);
                    self.v2t.push(NONE);
                    let created = self.commit(pi, cav);
                    self.after_insert(pi, &created, &mut segq, &mut triq);
                }
            }
        }
        Ok(())
    }
}
