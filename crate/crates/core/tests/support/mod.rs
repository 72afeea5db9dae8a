pub mod fbm;
