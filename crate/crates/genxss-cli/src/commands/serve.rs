use genxss_core::vulnapp::{serve_vuln_app, RouteConfig};

use crate::config::ResolvedConfig;
use crate::{CliError, ServeAppArgs};

pub fn run(config: &ResolvedConfig, args: &ServeAppArgs) -> Result<(), CliError> {
    let bind = args
        .bind
        .clone()
        .unwrap_or_else(|| config.config.app.bind.clone());
    let routes_path = args
        .routes
        .clone()
        .unwrap_or_else(|| config.resolve(&config.config.paths.routes));
    let routes = if routes_path.exists() {
        RouteConfig::load(&routes_path)?
    } else {
        RouteConfig::default_routes()
    };

    let server = serve_vuln_app(&bind, routes)?;
    println!("vulnerable app listening on http://{}", server.addr());
    println!("routes: GET /gym?<param>=<value>; press Ctrl+C to stop");
    loop {
        std::thread::park();
    }
}
