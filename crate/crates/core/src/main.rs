fn main() {
    std::process::exit(gdpl_core::run());
}
