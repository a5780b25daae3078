fn main() -> std::process::ExitCode {
    scene_forecaster::app::main()
}
