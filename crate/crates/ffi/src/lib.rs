//! C interface to the `sitepair` library.
//!
//! Handles are opaque and owned by the caller once returned; free them with the
//! matching `*_free` function. Every fallible call returns an [`SpStatus`] and
//! leaves a message retrievable with [`sp_last_error`] on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sitepair::ci::StateTag;
use sitepair::config::{Format, RunConfig};
use sitepair::observables::{radial_pair_density, Level, PairWavefunction};
use sitepair::pipeline::{PointSolution, System};
use sitepair::quantities::{derive_pair_parameters, nm_to_bohr, AtomSpecies, TrapSpec};
use sitepair::solver::OrbitalSet;
use sitepair::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Domain = 4,
    Numerical = 5,
    NotFound = 6,
    Io = 7,
    InvalidArgument = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpLevel {
    E2 = 0,
    Ci2 = 1,
    E6 = 2,
    Ci6 = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpTag {
    LeastBound = 0,
    FirstTrapInduced = 1,
}

/// Energy differences of one state, in kHz.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SpLedger {
    pub e2: f64,
    pub ci2: f64,
    pub e6: f64,
    pub ci6: f64,
    pub geom: f64,
    pub coup2: f64,
    pub coup6: f64,
    pub tot: f64,
}

/// A configured trap, pair and interaction, ready to solve points.
pub struct SpSystem {
    sys: System,
    com: Option<Vec<OrbitalSet>>,
}

/// One solved scattering length, with the COM orbitals it was built on.
pub struct SpPoint {
    com: Vec<OrbitalSet>,
    point: PointSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SpStatus {
    match e {
        Error::Config { .. } | Error::Parse { .. } | Error::UnknownUnit { .. } => SpStatus::Config,
        Error::Io { .. } => SpStatus::Io,
        Error::IncompleteLedger { .. } | Error::Anchor(_) => SpStatus::NotFound,
        Error::Domain(_)
        | Error::UnsupportedOrder { .. }
        | Error::AngularDegree { .. }
        | Error::Symmetry(_)
        | Error::Incompatible(_) => SpStatus::Domain,
        Error::Context { source, .. } => status_of(source),
        _ => SpStatus::Numerical,
    }
}

struct Fail(SpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SpStatus::Ok
        }
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {m}"));
            SpStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(SpStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn level(l: SpLevel) -> Level {
    match l {
        SpLevel::E2 => Level::E2,
        SpLevel::Ci2 => Level::CI2,
        SpLevel::E6 => Level::E6,
        SpLevel::Ci6 => Level::CI6,
    }
}

fn tag(t: SpTag) -> StateTag {
    match t {
        SpTag::LeastBound => StateTag::LeastBound,
        SpTag::FirstTrapInduced => StateTag::FirstTrapInduced,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn sp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Harmonic REL and COM trap frequencies (ω/2π, kHz). Depths are in recoil
/// energies of the first atom at this wavelength.
///
/// # Safety
/// `first` and `second` must be NUL-terminated strings; the outputs must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sp_trap_frequencies(
    first: *const c_char,
    second: *const c_char,
    wavelength_nm: f64,
    depth_first: f64,
    depth_second: f64,
    omega_rel_khz: *mut f64,
    omega_com_khz: *mut f64,
) -> SpStatus {
    guard(|| {
        let a1 = AtomSpecies::from_catalog(str_arg(first, "first")?)?;
        let a2 = AtomSpecies::from_catalog(str_arg(second, "second")?)?;
        let (rel, com) = (out_arg(omega_rel_khz, "omega_rel_khz")?, out_arg(omega_com_khz, "omega_com_khz")?);
        let er = a1.recoil_energy(nm_to_bohr(wavelength_nm));
        let trap = TrapSpec::isotropic(wavelength_nm, depth_first * er, depth_second * er, 2)?;
        let pair = derive_pair_parameters(&a1, &a2, &trap)?;
        match (pair.omega_rel_khz(), pair.omega_com_khz()) {
            (Some(r), Some(c)) => {
                *rel = r;
                *com = c;
                Ok(())
            }
            _ => Err(Fail(SpStatus::Domain, "trap has no harmonic frequency (non-positive curvature)".into())),
        }
    })
}

/// Builds a system from TOML configuration text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sp_system_from_toml(toml: *const c_char, out: *mut *mut SpSystem) -> SpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(toml, "toml")?;
        let cfg = RunConfig::parse(text, Format::Toml, Path::new("<ffi>"))?;
        let sys = System::build(&cfg)?;
        *out = Box::into_raw(Box::new(SpSystem { sys, com: None }));
        Ok(())
    })
}

/// # Safety
/// `system` must come from [`sp_system_from_toml`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sp_system_free(system: *mut SpSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Harmonic REL frequency ω (hartree), oscillator length (a0) and ξ = a_sc/a_ho.
///
/// # Safety
/// `system` must be a live handle; the outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sp_system_scales(
    system: *const SpSystem,
    a_sc: f64,
    omega: *mut f64,
    a_ho: *mut f64,
    xi: *mut f64,
) -> SpStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| null("system"))?;
        let (o, l, x) = (out_arg(omega, "omega")?, out_arg(a_ho, "a_ho")?, out_arg(xi, "xi")?);
        let p = &s.sys.pair;
        match (p.omega_rel, p.a_ho, p.xi(a_sc)) {
            (Some(w), Some(h), Some(r)) => {
                (*o, *l, *x) = (w, h, r);
                Ok(())
            }
            _ => Err(Fail(SpStatus::Domain, "trap has no harmonic frequency (non-positive curvature)".into())),
        }
    })
}

/// Tunes the interaction to `a_sc` (a0) and solves every configured order.
/// COM orbitals are computed on the first call and reused.
///
/// # Safety
/// `system` must be a live handle not used concurrently; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sp_system_solve(system: *mut SpSystem, a_sc: f64, out: *mut *mut SpPoint) -> SpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = system.as_mut().ok_or_else(|| null("system"))?;
        if !a_sc.is_finite() {
            return Err(Fail(SpStatus::InvalidArgument, format!("a_sc must be finite, got {a_sc}")));
        }
        if s.com.is_none() {
            s.com = Some(s.sys.solve_com()?);
        }
        let com = s.com.clone().unwrap_or_default();
        let point = s.sys.solve_point(&com, Some(a_sc))?;
        *out = Box::into_raw(Box::new(SpPoint { com, point }));
        Ok(())
    })
}

/// # Safety
/// `point` must come from [`sp_system_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sp_point_free(point: *mut SpPoint) {
    if !point.is_null() {
        drop(Box::from_raw(point));
    }
}

/// Scattering length actually reached by the tuner (a0).
///
/// # Safety
/// `point` must be a live handle and `a_sc` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sp_point_achieved_a_sc(point: *const SpPoint, a_sc: *mut f64) -> SpStatus {
    guard(|| {
        let p = point.as_ref().ok_or_else(|| null("point"))?;
        let out = out_arg(a_sc, "a_sc")?;
        *out = p.point.achieved_a_sc.ok_or_else(|| Fail(SpStatus::NotFound, "no scattering length for this point".into()))?;
        Ok(())
    })
}

/// Energy (hartree) of the lowest `tag` state at `level`.
///
/// # Safety
/// `point` must be a live handle and `energy` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sp_point_energy(point: *const SpPoint, level: SpLevel, tag: SpTag, energy: *mut f64) -> SpStatus {
    guard(|| {
        let p = point.as_ref().ok_or_else(|| null("point"))?;
        let out = out_arg(energy, "energy")?;
        let l = self::level(level);
        *out = p
            .point
            .energy(l, self::tag(tag))
            .ok_or_else(|| Fail(SpStatus::NotFound, format!("no {} state at {l}", self::tag(tag))))?;
        Ok(())
    })
}

/// Energy ledger of `tag` in kHz; needs orders 2 and 6.
///
/// # Safety
/// `point` must be a live handle and `ledger` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sp_point_ledger(point: *const SpPoint, tag: SpTag, ledger: *mut SpLedger) -> SpStatus {
    guard(|| {
        let p = point.as_ref().ok_or_else(|| null("point"))?;
        let out = out_arg(ledger, "ledger")?;
        let l = p.point.ledger(self::tag(tag))?.to_khz();
        *out = SpLedger {
            e2: l.e2,
            ci2: l.ci2,
            e6: l.e6,
            ci6: l.ci6,
            geom: l.geom,
            coup2: l.coup2,
            coup6: l.coup6,
            tot: l.tot,
        };
        Ok(())
    })
}

/// Radial pair density ρ(r) (per a0) at `n` radii.
///
/// # Safety
/// `point` must be a live handle; `r` and `rho` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn sp_point_radial_density(
    point: *const SpPoint,
    level: SpLevel,
    tag: SpTag,
    r: *const f64,
    n: usize,
    rho: *mut f64,
) -> SpStatus {
    guard(|| {
        let p = point.as_ref().ok_or_else(|| null("point"))?;
        if n == 0 {
            return Ok(());
        }
        if r.is_null() || rho.is_null() {
            return Err(null(if r.is_null() { "r" } else { "rho" }));
        }
        let (grid, dst) = (std::slice::from_raw_parts(r, n), std::slice::from_raw_parts_mut(rho, n));
        let l = self::level(level);
        let t = self::tag(tag);
        let k = p
            .point
            .orders
            .iter()
            .position(|o| o.order == l.order)
            .ok_or_else(|| Fail(SpStatus::NotFound, format!("order {} was not solved", l.order)))?;
        let o = &p.point.orders[k];
        let wf = if l.coupled {
            let s = o.ci.state(t).ok_or_else(|| Fail(SpStatus::NotFound, format!("no {t} state at {l}")))?;
            PairWavefunction::from_ci(&p.com[k], &o.rel, &o.ci, s)?
        } else {
            PairWavefunction::uncoupled(&p.com[k], &o.rel, t, l.order)?
        };
        let d = radial_pair_density(&wf, grid)?;
        dst.copy_from_slice(&d.rho);
        Ok(())
    })
}

/// Harmonic-trap energy (same units as `omega`) of the zero-range pseudopotential
/// with scattering length `a_sc`, in energy window `window` (−1 for the bound branch).
///
/// # Safety
/// `energy` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sp_energy_from_asc(a_sc: f64, omega: f64, a_ho: f64, window: c_int, energy: *mut f64) -> SpStatus {
    guard(|| {
        let out = out_arg(energy, "energy")?;
        *out = sitepair::feshbach::energy_from_asc(a_sc, omega, a_ho, window)?;
        Ok(())
    })
}

/// Hartree to kHz (E/h).
#[no_mangle]
pub extern "C" fn sp_hartree_to_khz(energy: f64) -> f64 {
    sitepair::quantities::hartree_to_khz(energy)
}
