/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "aggline/service.hpp"
#include "httplib.h"

int main(int argc, char** argv) {
    CLI::App app{"Aggregate lineage HTTP service"};
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string snapshot_dir;
    if (const char* h = std::getenv("AGGLINE_HOST")) host = h;
    if (const char* p = std::getenv("AGGLINE_PORT")) port = std::atoi(p);
    app.add_option("--host", host, "Bind address (env AGGLINE_HOST)")->capture_default_str();
    app.add_option("--port", port, "Port (env AGGLINE_PORT)")->capture_default_str();
    app.add_option("--snapshot-dir", snapshot_dir, "Write every built sketch here as <id>.agl");
    CLI11_PARSE(app, argc, argv);

    aggline::service::Catalog catalog(snapshot_dir.empty()
                                          ? std::nullopt
                                          : std::optional<std::filesystem::path>(snapshot_dir));
    httplib::Server server;
    server.set_payload_max_length(std::size_t{1} << 31);
    aggline::service::install_routes(server, catalog);
    std::cerr << "listening on " << host << ':' << port << '\n';
    if (!server.listen(host, port)) {
        std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
        return 1;
    }
    return 0;
}
