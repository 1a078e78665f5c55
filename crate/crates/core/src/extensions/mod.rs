//! Studies beyond the single node: a tandem chain of nodes, and buffer
//! sizing for rare overflow.

mod buffer_size;
mod tandem;

pub use buffer_size::{
    buffer_size_study, buffer_size_sweep, occupancy_histogram, quantile_size, write_buffer_csv, BufferSizeResult,
    BufferStudyConfig, GridMg,
};
pub use tandem::{
    run_tandem, run_tandem_on, tandem_study, tandem_t_end, write_tandem_csv, TandemConfig, TandemPair, TandemResult,
};
