/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairtopk/http_routes.hpp"
#include "fairtopk/ingest.hpp"

using namespace fairtopk;

int main(int argc, char** argv) {
    CLI::App app{"HTTP service for fair top-k audits and repairs"};
    IngestionSpec spec;
    std::string host = "127.0.0.1";
    int port = 8080;
    int syncMillis = 250;
    app.add_option("--data", spec.path, "CSV file with a header row")->required();
    app.add_option("--score-cols", spec.scoreColumns, "score columns in order")->delimiter(',')->required();
    app.add_option("--group-col", spec.groupColumn, "group label column")->required();
    app.add_option("--protected", spec.protectedValue, "protected group label")->required();
    app.add_option("--derived", spec.derivedColumns, "derived column name=expr");
    app.add_option("--snap", spec.snapPlaces, "decimal places of the score grid");
    app.add_option("--host", host, "bind address");
    app.add_option("--port", port, "port");
    app.add_option("--sync-ms", syncMillis, "how long POST /v1/repair waits before answering with a job id");
    CLI11_PARSE(app, argc, argv);

    try {
        IngestionResult r = ingestCsv(spec);
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        Service service(std::move(r.dataset), ServiceOptions{std::chrono::milliseconds(syncMillis)});
        httplib::Server server;
        mountRoutes(server, service);
        std::cerr << "listening on http://" << host << ":" << port << "\n";
        if (!server.listen(host, port)) {
            std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
