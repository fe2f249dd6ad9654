//! Text configuration files and frame persistence.

mod config_file;
mod frame_file;

pub use config_file::{config_to_text, load_config, parse_config, save_config, set_key, KEYS};
pub use frame_file::{load_frame, read_header, save_frame, sidecar_path, FrameFileHeader, FORMAT_VERSION};
