fn main() {
    let out = dilation_core::cli::run(std::env::args_os());
    if out.code == dilation_core::cli::EXIT_OK || !out.report.is_null() {
        print!("{}", out.text);
    } else {
        eprint!("{}", out.text);
    }
    std::process::exit(out.code);
}
