fn main() {
    std::process::exit(afinv::run_placeholder());
}
