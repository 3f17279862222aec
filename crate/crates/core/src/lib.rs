//! Static audit of spreadsheet workbooks against three review controls:
//! data validity checks, clear data placement and labels, and display of
//! constants.

pub mod classify;
pub mod controls;
pub mod depgraph;
pub mod formula;
pub mod ingest;
pub mod report;
