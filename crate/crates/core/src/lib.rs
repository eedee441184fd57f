//! Complex Floquet-Bloch spectra of periodic thermodiffusive elastic laminates.

pub mod assembly;
pub mod cli;
pub mod materials;
pub mod numerics;
pub mod spectrum;
pub mod transfer;
