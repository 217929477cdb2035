//! Mobile ad-hoc network benchmark: random-waypoint hosts on a torus that
//! broadcast pings to every host within the transmission radius.

use crate::geom::{in_range, torus_distance, Arena, Position};
use crate::ids::{SeId, Timestep};
use crate::model::{Delivery, Emission, InboundEvent, Model, ModelError};
use crate::rng::{derive_stream, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub num_mh: u64,
    pub arena: Arena,
    pub radius: f64,
    pub broadcast_fraction: f64,
    pub steps: u64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub waypoint_eps: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_mh: 3000,
            arena: Arena::new(10_000.0, 10_000.0),
            radius: 250.0,
            broadcast_fraction: 0.2,
            steps: 500,
            speed_min: 1.0,
            speed_max: 5.0,
            waypoint_eps: 1e-9,
            seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.num_mh == 0 {
            return Err("num_mh must be > 0".into());
        }
        if !(self.arena.width > 0.0 && self.arena.height > 0.0) {
            return Err("arena must be positive".into());
        }
        if !(self.radius > 0.0) {
            return Err("radius must be > 0".into());
        }
        if !(self.broadcast_fraction > 0.0 && self.broadcast_fraction <= 1.0) {
            return Err("fraction must be in (0,1]".into());
        }
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max) {
            return Err("need 0 < speed_min <= speed_max".into());
        }
        if !(self.waypoint_eps >= 0.0) {
            return Err("waypoint_eps must be >= 0".into());
        }
        Ok(())
    }

    /// Mean number of other hosts inside one host's radius under uniform density.
    pub fn expected_neighbors(&self) -> f64 {
        (self.num_mh as f64 - 1.0) * std::f64::consts::PI * self.radius * self.radius
            / (self.arena.width * self.arena.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobileHostState {
    pub pos: Position,
    pub waypoint: Position,
    pub speed: f64,
}

impl MobileHostState {
    pub const ENCODED_LEN: usize = 40;
}

fn uniform_point(rng: &mut crate::rng::RngStream, arena: Arena) -> Position {
    Position::new(rng.uniform(0.0, arena.width), rng.uniform(0.0, arena.height))
}

/// One random-waypoint step with zero pause time.
pub fn rwp_step(state: &MobileHostState, se: SeId, step: Timestep, cfg: &ModelConfig) -> MobileHostState {
    let arena = cfg.arena;
    let dist = torus_distance(state.pos, state.waypoint, arena);
    if dist <= state.speed.max(cfg.waypoint_eps) {
        let mut rng = derive_stream(cfg.seed, se, Purpose::Waypoint, step);
        let waypoint = uniform_point(&mut rng, arena);
        let speed = rng.uniform(cfg.speed_min, cfg.speed_max);
        return MobileHostState { pos: state.waypoint, waypoint, speed };
    }
    let (dx, dy) = arena.signed_delta(state.pos, state.waypoint);
    let k = state.speed / dist;
    let pos = arena.wrap(Position::new(state.pos.x + dx * k, state.pos.y + dy * k));
    MobileHostState { pos, ..*state }
}

/// Independent per-host lottery.
pub fn broadcasts(se: SeId, step: Timestep, cfg: &ModelConfig) -> bool {
    if cfg.broadcast_fraction >= 1.0 {
        return true;
    }
    let draw = derive_stream(cfg.seed, se, Purpose::BroadcastLottery, step).next_u64();
    (draw as u128) < (cfg.broadcast_fraction * 18_446_744_073_709_551_616.0) as u128
}

pub fn choose_broadcasters(step: Timestep, cfg: &ModelConfig) -> Vec<SeId> {
    (0..cfg.num_mh).map(SeId).filter(|&se| broadcasts(se, step, cfg)).collect()
}

pub fn encode_position(p: Position) -> Vec<u8> {
    let mut v = Vec::with_capacity(16);
    v.extend_from_slice(&p.x.to_be_bytes());
    v.extend_from_slice(&p.y.to_be_bytes());
    v
}

pub fn decode_position(b: &[u8]) -> Option<Position> {
    if b.len() != 16 {
        return None;
    }
    Some(Position::new(
        f64::from_be_bytes(b[..8].try_into().unwrap()),
        f64::from_be_bytes(b[8..].try_into().unwrap()),
    ))
}

/// Uniform bucket grid over the torus with cells at least `radius` wide.
struct Grid {
    nx: usize,
    ny: usize,
    cw: f64,
    ch: f64,
    cells: Vec<Vec<u32>>,
}

impl Grid {
    fn new(arena: Arena, radius: f64) -> Self {
        let nx = ((arena.width / radius).floor() as usize).clamp(1, 4096);
        let ny = ((arena.height / radius).floor() as usize).clamp(1, 4096);
        Self { nx, ny, cw: arena.width / nx as f64, ch: arena.height / ny as f64, cells: vec![Vec::new(); nx * ny] }
    }

    fn cell_of(&self, p: Position) -> (usize, usize) {
        (((p.x / self.cw) as usize).min(self.nx - 1), ((p.y / self.ch) as usize).min(self.ny - 1))
    }

    fn insert(&mut self, p: Position, idx: u32) {
        let (cx, cy) = self.cell_of(p);
        self.cells[cy * self.nx + cx].push(idx);
    }

    fn neighbourhood(&self, p: Position, out: &mut Vec<usize>) {
        out.clear();
        let (cx, cy) = self.cell_of(p);
        for oy in [self.ny - 1, 0, 1] {
            for ox in [self.nx - 1, 0, 1] {
                let c = ((cy + oy) % self.ny) * self.nx + (cx + ox) % self.nx;
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Manet {
    cfg: ModelConfig,
}

impl Manet {
    pub fn new(cfg: ModelConfig) -> Self {
        Self { cfg }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }
}

impl Model for Manet {
    type State = MobileHostState;

    fn num_entities(&self) -> u64 {
        self.cfg.num_mh
    }

    fn initial_state(&self, se: SeId) -> MobileHostState {
        let mut rng = derive_stream(self.cfg.seed, se, Purpose::Mobility, Timestep(0));
        let pos = uniform_point(&mut rng, self.cfg.arena);
        let waypoint = uniform_point(&mut rng, self.cfg.arena);
        let speed = rng.uniform(self.cfg.speed_min, self.cfg.speed_max);
        MobileHostState { pos, waypoint, speed }
    }

    fn advance(&self, se: SeId, state: &mut MobileHostState, step: Timestep, out: &mut Vec<Emission>) {
        *state = rwp_step(state, se, step, &self.cfg);
        if broadcasts(se, step, &self.cfg) {
            out.push(Emission { dest: SeId::BROADCAST, payload: encode_position(state.pos) });
        }
    }

    fn deliver(
        &self,
        events: &[InboundEvent],
        residents: &[(SeId, &MobileHostState)],
        out: &mut Vec<Delivery>,
    ) -> Result<(), ModelError> {
        if events.is_empty() || residents.is_empty() {
            return Ok(());
        }
        let mut grid = Grid::new(self.cfg.arena, self.cfg.radius);
        for (i, (_, st)) in residents.iter().enumerate() {
            grid.insert(st.pos, i as u32);
        }
        let mut cells = Vec::with_capacity(9);
        let mut hits: Vec<u32> = Vec::new();
        for (ei, ev) in events.iter().enumerate() {
            let body = &ev.body;
            if !body.is_broadcast() {
                if let Ok(k) = residents.binary_search_by_key(&body.dest, |(se, _)| *se) {
                    out.push(Delivery { event: ei, receiver: residents[k].0 });
                }
                continue;
            }
            let origin = decode_position(&body.payload)
                .ok_or(ModelError::MalformedPayload { sender: body.sender, len: body.payload.len() })?;
            grid.neighbourhood(origin, &mut cells);
            hits.clear();
            for &c in &cells {
                for &idx in &grid.cells[c] {
                    let (se, st) = residents[idx as usize];
                    if se != body.sender && in_range(origin, st.pos, self.cfg.radius, self.cfg.arena) {
                        hits.push(idx);
                    }
                }
            }
            hits.sort_unstable();
            out.extend(hits.iter().map(|&idx| Delivery { event: ei, receiver: residents[idx as usize].0 }));
        }
        Ok(())
    }

    fn encode_state(&self, s: &MobileHostState, out: &mut Vec<u8>) {
        for v in [s.pos.x, s.pos.y, s.waypoint.x, s.waypoint.y, s.speed] {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }

    fn decode_state<'a>(&self, buf: &'a [u8]) -> Result<(MobileHostState, &'a [u8]), ModelError> {
        if buf.len() < MobileHostState::ENCODED_LEN {
            return Err(ModelError::MalformedState);
        }
        let f = |i: usize| f64::from_be_bytes(buf[i * 8..i * 8 + 8].try_into().unwrap());
        let s = MobileHostState { pos: Position::new(f(0), f(1)), waypoint: Position::new(f(2), f(3)), speed: f(4) };
        Ok((s, &buf[MobileHostState::ENCODED_LEN..]))
    }
}
