pub mod newton;
pub mod normal;
pub mod quad;
pub mod region;
pub mod roots;
