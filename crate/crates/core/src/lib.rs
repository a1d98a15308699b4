pub mod bankserve;
pub mod evalcore;
pub mod genai;
pub mod mathexpr;
pub mod qmodel;
pub mod validator;
