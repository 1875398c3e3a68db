//! Session: the current bundle with its cached preview, undo/redo history
//! and decomposition jobs.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex, RwLock};

use pigment_core::image::box_downsample;
use pigment_core::{DecompositionBundle, PigmentDictionary};
use serde::Serialize;

use crate::error::{ApiError, ApiResult};

pub const UNDO_DEPTH: usize = 32;
/// Longest edge of weight thumbnails.
pub const THUMBNAIL_EDGE: usize = 128;

/// A bundle together with its rendered PNG, so reads never re-render.
#[derive(Debug)]
pub struct Snapshot {
    pub bundle: DecompositionBundle,
    pub png: Vec<u8>,
}

impl Snapshot {
    pub fn new(bundle: DecompositionBundle) -> ApiResult<Self> {
        let png = pigment_io::encode_png(&bundle.render())?;
        Ok(Self { bundle, png })
    }

    /// 8-bit grayscale PNG of weight map `i`, at most `max_edge` on a side.
    pub fn weight_png(&self, i: usize, max_edge: Option<usize>) -> ApiResult<Vec<u8>> {
        let b = &self.bundle;
        if i >= b.palette().len() {
            return Err(ApiError::not_found(format!(
                "pigment {i} out of range (palette has {})",
                b.palette().len()
            )));
        }
        let (mut w, mut h) = (b.width(), b.height());
        let mut values = b.weights().channel(i);
        if let Some(edge) = max_edge {
            while w.max(h) > edge {
                values = box_downsample(&values, 1, w, h);
                w = w.div_ceil(2);
                h = h.div_ceil(2);
            }
        }
        Ok(pigment_io::encode_gray_png(&values, w, h)?)
    }
}

#[derive(Debug, Default)]
pub struct Session {
    pub current: Option<Arc<Snapshot>>,
    pub undo: VecDeque<Arc<Snapshot>>,
    pub redo: Vec<Arc<Snapshot>>,
    pub revision: u64,
}

impl Session {
    /// Make `next` current after an edit: the old state goes on the undo
    /// stack (oldest dropped beyond the depth) and redo history is cleared.
    pub fn push(&mut self, next: Arc<Snapshot>) -> u64 {
        if let Some(prev) = self.current.replace(next) {
            self.undo.push_back(prev);
            if self.undo.len() > UNDO_DEPTH {
                self.undo.pop_front();
            }
        }
        self.redo.clear();
        self.revision += 1;
        self.revision
    }

    /// Start over from `next` with empty history (a new decomposition or a
    /// loaded file).
    pub fn reset(&mut self, next: Arc<Snapshot>) -> u64 {
        self.current = Some(next);
        self.undo.clear();
        self.redo.clear();
        self.revision += 1;
        self.revision
    }

    pub fn undo(&mut self) -> ApiResult<u64> {
        let prev = self.undo.pop_back().ok_or_else(|| ApiError::conflict("nothing to undo"))?;
        if let Some(cur) = self.current.replace(prev) {
            self.redo.push(cur);
        }
        self.revision += 1;
        Ok(self.revision)
    }

    pub fn redo(&mut self) -> ApiResult<u64> {
        let next = self.redo.pop().ok_or_else(|| ApiError::conflict("nothing to redo"))?;
        if let Some(cur) = self.current.replace(next) {
            self.undo.push_back(cur);
        }
        self.revision += 1;
        Ok(self.revision)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub width: usize,
    pub height: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobResult {
    pub width: usize,
    pub height: usize,
    pub pigments: usize,
    pub wavelengths: usize,
    pub rmse: f64,
    pub subset_size: usize,
    pub anls_iterations: usize,
    pub anls_converged: bool,
    pub anls_energy: Vec<f64>,
    pub levels: Vec<LevelSummary>,
    pub revision: u64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum JobStatus {
    Running,
    Done { result: JobResult },
    Failed { error: String },
}

#[derive(Debug, Default)]
pub struct Jobs {
    pub next_id: u64,
    pub running: Option<u64>,
    pub status: HashMap<u64, JobStatus>,
}

pub struct AppState {
    pub dict: PigmentDictionary,
    pub session: RwLock<Session>,
    pub jobs: Mutex<Jobs>,
    /// Serialises writers; readers only take the session lock briefly.
    pub writer: tokio::sync::Mutex<()>,
}

impl AppState {
    pub fn new(dict: PigmentDictionary) -> Self {
        Self {
            dict,
            session: RwLock::new(Session::default()),
            jobs: Mutex::new(Jobs::default()),
            writer: tokio::sync::Mutex::new(()),
        }
    }

    /// Start with `bundle` loaded.
    pub fn with_bundle(dict: PigmentDictionary, bundle: DecompositionBundle) -> ApiResult<Self> {
        let state = Self::new(dict);
        state.session.write().expect("session lock").reset(Arc::new(Snapshot::new(bundle)?));
        Ok(state)
    }

    /// The current snapshot and revision.
    pub fn current(&self) -> ApiResult<(Arc<Snapshot>, u64)> {
        let s = self.session.read().expect("session lock");
        let cur = s.current.clone().ok_or_else(ApiError::no_bundle)?;
        Ok((cur, s.revision))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pigment_core::{Palette, PigmentKm, RenderContext, WavelengthGrid, WeightMap};

    fn snap(v: f64) -> Arc<Snapshot> {
        let g = WavelengthGrid::Bands3;
        let p = PigmentKm::constant(3, 0.5, 1.0).unwrap();
        let pal = Palette::from_pigments(g, &[p.clone(), p]).unwrap();
        let w = WeightMap::new(2, vec![v, 1.0 - v]).unwrap();
        let b = DecompositionBundle::new(1, 1, pal, w, RenderContext::standard(g)).unwrap();
        Arc::new(Snapshot::new(b).unwrap())
    }

    #[test]
    fn undo_depth_is_bounded() {
        let mut s = Session::default();
        s.reset(snap(0.0));
        for k in 1..=40 {
            s.push(snap(k as f64 / 40.0));
        }
        assert_eq!(s.undo.len(), UNDO_DEPTH);
        for _ in 0..UNDO_DEPTH {
            s.undo().unwrap();
        }
        assert_eq!(s.undo().unwrap_err().status, 409);
        assert_eq!(s.redo.len(), UNDO_DEPTH);
        // The oldest surviving state is the 8th edit.
        assert_eq!(s.current.as_ref().unwrap().bundle.weights().row(0)[0], (8.0f64 / 40.0) as f32 as f64);
    }

    #[test]
    fn new_edit_clears_redo() {
        let mut s = Session::default();
        s.reset(snap(0.0));
        s.push(snap(0.5));
        s.undo().unwrap();
        assert_eq!(s.redo.len(), 1);
        s.push(snap(0.25));
        assert!(s.redo.is_empty());
        assert_eq!(s.redo().unwrap_err().status, 409);
    }
}
