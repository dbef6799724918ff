//! Simulator for a division-of-focal-plane polarization event camera and the
//! reconstruction algorithms that turn its output back into polarization state.
//!
//! The sensor model is a 346x260 array of DVS+APS subpixels behind a 2x2
//! micro-polarizer mosaic (0/45/90/135 degrees). [`sensor`] generates the
//! asynchronous brightness-change events and exposure-integrated frames,
//! [`recon`] hosts the three reconstruction engines (frame-based Stokes,
//! events-only IIR, frame/event complementary filter), [`eval`] reproduces the
//! accuracy-vs-speed, HDR and event-statistics experiments, and [`io`] handles
//! the binary event/frame formats, CSV export and run configuration.

pub mod eval;
pub mod io;
pub mod polarization;
pub mod recon;
pub mod sensor;
