/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

// Transport-independent request handling for the v1 HTTP API. Repairs run on
// a single executor thread, one at a time, in submission order.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "fairtopk/app.hpp"

namespace fairtopk {

struct HttpResponse {
    int status = 200;
    Json body;
};

struct ServiceOptions {
    // POST /v1/repair answers inline when the job finishes within this window
    std::chrono::milliseconds syncWindow{250};
};

class Service {
public:
    explicit Service(std::optional<Dataset> dataset, ServiceOptions options = {})
        : dataset_(std::move(dataset)), options_(options), executor_([this] { executorLoop(); }) {}

    ~Service() {
        {
            std::lock_guard lock(mutex_);
            shutdown_ = true;
            for (auto& [id, job] : jobs_) job->cancel.store(true);
        }
        wake_.notify_all();
        executor_.join();
    }

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    HttpResponse handle(const std::string& method, const std::string& path, const std::string& body = {}) {
        const std::string jobs = "/v1/jobs/";
        if (method == "GET" && path == "/v1/dataset") return datasetInfo();
        if (method == "POST" && path == "/v1/audit") return audit(body);
        if (method == "POST" && path == "/v1/repair") return repair(body);
        if (path.rfind(jobs, 0) == 0 && path.size() > jobs.size()) {
            std::string id = path.substr(jobs.size());
            if (method == "GET") return jobStatus(id);
            if (method == "DELETE") return cancelJob(id);
        }
        return {404, {{"error", "not_found"}, {"reason", method + " " + path + " is not an endpoint"}}};
    }

    HttpResponse datasetInfo() const {
        if (!dataset_) return noDataset();
        const Dataset& ds = *dataset_;
        Json groups = Json::array();
        std::vector<int> counts(ds.groups().size(), 0);
        for (const Candidate& c : ds.candidates()) ++counts[c.group];
        for (std::size_t g = 0; g < ds.groups().size(); ++g)
            groups.push_back({{"name", ds.groups()[g]},
                              {"count", counts[g]},
                              {"protected", static_cast<int>(g) == ds.protectedGroup()}});
        Json columns = Json::array();
        for (const auto& name : ds.columnNames()) columns.push_back(name);
        return {200,
                {{"n", ds.size()},
                 {"d", ds.dim()},
                 {"groups", groups},
                 {"protectedShare", static_cast<double>(ds.protectedCount()) / ds.size()},
                 {"columnNames", columns}}};
    }

    HttpResponse audit(const std::string& body) const {
        if (!dataset_) return noDataset();
        try {
            Json req = parseBody(body);
            WeightVector w = weightField(req, "w");
            FairnessSpec spec = specFields(req);
            return {200, toJson(runAudit(*dataset_, w, spec))};
        } catch (const std::invalid_argument& e) {
            return badRequest(e.what());
        } catch (const Json::exception& e) {
            return badRequest(e.what());
        }
    }

    HttpResponse repair(const std::string& body) {
        if (!dataset_) return noDataset();
        auto job = std::make_shared<Job>();
        try {
            Json req = parseBody(body);
            job->w0 = weightField(req, "w0");
            job->spec = specFields(req);
            job->spec.checkAgainst(*dataset_);
            if (job->w0.dim() != dataset_->dim())
                throw ValidationError("w0 has " + std::to_string(job->w0.dim()) + " components, dataset has " +
                                      std::to_string(dataset_->dim()));
            job->eps = req.contains("eps") ? numberField(req, "eps") : Rational(1, 10);
            if (job->eps < 0 || job->eps > 1) throw ValidationError("eps must be within [0, 1]");
            std::string algorithm = req.value("algorithm", dataset_->dim() == 2 ? "sweep2d" : "klevel-hd");
            job->options.algorithm = parseAlgorithm(algorithm);
            if (job->options.algorithm == Algorithm::Sweep2D && dataset_->dim() != 2)
                throw ValidationError("sweep2d needs a two-column dataset");
            job->options.workers = req.value("workers", 1);
            if (job->options.workers < 1 || job->options.workers > 256) throw ValidationError("workers must be in [1, 256]");
            job->options.seed = req.value("seed", std::uint64_t{0});
            if (req.contains("budget") && !req["budget"].is_null()) job->options.budget = req["budget"].get<std::uint64_t>();
            if (req.contains("timeLimitMs") && !req["timeLimitMs"].is_null())
                job->options.timeLimit = std::chrono::milliseconds(req["timeLimitMs"].get<std::int64_t>());
        } catch (const std::invalid_argument& e) {
            return badRequest(e.what());
        } catch (const Json::exception& e) {
            return badRequest(e.what());
        }
        job->options.cancel = &job->cancel;

        std::unique_lock lock(mutex_);
        job->id = "job-" + std::to_string(++nextId_);
        jobs_[job->id] = job;
        queue_.push_back(job);
        wake_.notify_all();
        done_.wait_for(lock, options_.syncWindow, [&] { return job->finished(); });
        return {job->finished() ? 200 : 202, describe(*job)};
    }

    HttpResponse jobStatus(const std::string& id) const {
        std::lock_guard lock(mutex_);
        auto it = jobs_.find(id);
        if (it == jobs_.end()) return {404, {{"error", "not_found"}, {"reason", "unknown job " + id}}};
        return {200, describe(*it->second)};
    }

    HttpResponse cancelJob(const std::string& id) {
        std::lock_guard lock(mutex_);
        auto it = jobs_.find(id);
        if (it == jobs_.end()) return {404, {{"error", "not_found"}, {"reason", "unknown job " + id}}};
        Job& job = *it->second;
        job.cancel.store(true);
        if (job.status == "queued") {
            job.status = "cancelled";
            done_.notify_all();
        }
        return {200, describe(job)};
    }

    /// Blocks until the job leaves the queued/running states (for tests and tools).
    bool waitForJob(const std::string& id, std::chrono::milliseconds timeout) {
        std::unique_lock lock(mutex_);
        auto it = jobs_.find(id);
        if (it == jobs_.end()) return false;
        auto job = it->second;
        return done_.wait_for(lock, timeout, [&] { return job->finished(); });
    }

    const std::optional<Dataset>& dataset() const { return dataset_; }

private:
    struct Job {
        std::string id;
        std::string status = "queued";  // queued, running, done, cancelled, failed
        WeightVector w0;
        Rational eps;
        FairnessSpec spec;
        RepairOptions options;
        std::atomic<bool> cancel{false};
        std::optional<Json> result;
        std::string error;

        bool finished() const { return status != "queued" && status != "running"; }
    };

    static Json describe(const Job& job) {
        Json out = job.result ? *job.result : Json::object();
        out["jobId"] = job.id;
        out["status"] = job.status;
        if (!job.error.empty()) out["reason"] = job.error;
        return out;
    }

    static HttpResponse badRequest(const std::string& reason) {
        return {400, {{"error", "validation"}, {"reason", reason}}};
    }

    static HttpResponse noDataset() { return {409, {{"error", "no_dataset"}, {"reason", "no dataset is loaded"}}}; }

    static Json parseBody(const std::string& body) {
        Json req = Json::parse(body.empty() ? "{}" : body, nullptr, false);
        if (req.is_discarded() || !req.is_object()) throw ValidationError("request body must be a JSON object");
        return req;
    }

    static Rational numberField(const Json& value) {
        if (value.is_string()) return parseDecimal(value.get<std::string>());
        if (value.is_number_integer()) return Rational(static_cast<long>(value.get<std::int64_t>()));
        if (value.is_number()) return fromDouble(value.get<double>());
        throw ValidationError("expected a number");
    }

    static Rational numberField(const Json& req, const std::string& name) {
        try {
            return numberField(req.at(name));
        } catch (const ValidationError&) {
            throw ValidationError("'" + name + "' must be a number");
        }
    }

    static WeightVector weightField(const Json& req, const std::string& name) {
        if (!req.contains(name) || !req[name].is_array()) throw ValidationError("'" + name + "' must be an array of weights");
        std::vector<Rational> w;
        for (const auto& x : req[name]) {
            Rational v = numberField(x);
            if (v < 0) throw ValidationError("'" + name + "' has a negative component");
            w.push_back(std::move(v));
        }
        return WeightVector(std::move(w));
    }

    FairnessSpec specFields(const Json& req) const {
        if (!req.contains("k") || !req["k"].is_number_integer()) throw ValidationError("'k' must be an integer");
        int k = req["k"].get<int>();
        int lower = req.value("lower", 0);
        int upper = req.value("upper", k);
        FairnessSpec spec(k, lower, upper);
        spec.checkAgainst(*dataset_);
        return spec;
    }

    void executorLoop() {
        std::unique_lock lock(mutex_);
        for (;;) {
            wake_.wait(lock, [&] { return shutdown_ || !queue_.empty(); });
            if (shutdown_) return;
            std::shared_ptr<Job> job = queue_.front();
            queue_.pop_front();
            if (job->status != "queued") continue;  // cancelled while waiting
            job->status = "running";
            lock.unlock();

            std::optional<Json> result;
            std::string error;
            std::string status = "done";
            try {
                RepairReport report = runRepair(*dataset_, job->w0, job->eps, job->spec, job->options);
                if (report.verdict == Verdict::Cancelled) status = "cancelled";
                result = toJson(report);
            } catch (const std::exception& e) {
                status = "failed";
                error = e.what();
            }

            lock.lock();
            job->result = std::move(result);
            job->error = std::move(error);
            job->status = status;
            done_.notify_all();
        }
    }

    std::optional<Dataset> dataset_;
    ServiceOptions options_;
    mutable std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    std::deque<std::shared_ptr<Job>> queue_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::uint64_t nextId_ = 0;
    bool shutdown_ = false;
    std::thread executor_;  // last: starts after the state above exists
};

}  // namespace fairtopk
