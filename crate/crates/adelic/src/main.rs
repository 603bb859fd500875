fn main() {
    std::process::exit(adelic::run_cli());
}
