/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <httplib.h>

#include "fairtopk/service.hpp"

namespace fairtopk {

/// Binds the v1 endpoints of `service` onto an httplib server.
inline void mountRoutes(httplib::Server& server, Service& service) {
    auto reply = [](httplib::Response& res, const HttpResponse& out) {
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/v1/dataset", [&service, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, service.datasetInfo());
    });
    server.Post("/v1/audit", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.audit(req.body));
    });
    server.Post("/v1/repair", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.repair(req.body));
    });
    server.Get(R"(/v1/jobs/([A-Za-z0-9-]+))", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.jobStatus(req.matches[1]));
    });
    server.Delete(R"(/v1/jobs/([A-Za-z0-9-]+))", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.cancelJob(req.matches[1]));
    });
}

}  // namespace fairtopk
