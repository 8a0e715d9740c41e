fn main() {
    std::process::exit(asg_lab::main_with_args(std::env::args_os()));
}
