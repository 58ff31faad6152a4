#include "dac/nodeload.hpp"

#include <algorithm>

#include "dac/errors.hpp"
#include "dac/fsutil.hpp"
#include "dac/remote.hpp"
#include "dac/revstore.hpp"

namespace dac {

NodeHandle::NodeHandle(Workspace& ws, std::string stage, std::string rev)
    : ws_(ws),
      stage_(std::move(stage)),
      rev_(std::move(rev)),
      memo_(std::make_shared<Memo>()) {}

NodeHandle NodeHandle::from_rev(Workspace& ws, const std::string& stage,
                                const std::string& rev,
                                std::optional<fs::path> remote) {
  RevStore revs(ws);
  std::string id;
  std::optional<Revision> revision;
  try {
    id = revs.resolve(rev);
    revision = revs.read_revision(id);
  } catch (const NotFoundError&) {
    if (!remote) throw;
    auto remote_id = remote_resolve(*remote, rev);
    if (!remote_id) throw;
    revision = remote_read_revision(*remote, *remote_id);
    if (!revision) throw;
    id = *remote_id;
  }

  NodeHandle handle(ws, stage, id);
  handle.remote_ = std::move(remote);

  auto tracked_bytes = [&](const std::string& path) {
    auto it = revision->tree.find(path);
    if (it == revision->tree.end())
      throw NotFoundError("path '" + path + "' not tracked at revision " + id);
    return ws.store().read_bytes(handle.ensure_local(it->second));
  };

  PipelineDef pipeline = parse_pipeline(tracked_bytes("pipeline.dac"));
  auto stage_it = pipeline.stages.find(stage);
  if (stage_it == pipeline.stages.end())
    throw NotFoundError("stage '" + stage + "' does not exist at revision " +
                        id.substr(0, 12));
  handle.def_ = stage_it->second;

  ParamTree params = ParamTree::parse(tracked_bytes("params.dac"));
  for (const auto& key : handle.def_.params) {
    if (params.has(key)) handle.params_.emplace(key, params.at(key));
  }

  LockFile lock = parse_lock(tracked_bytes("lock.dac"));
  const StageLock* sl = lock.find(stage);
  if (sl == nullptr)
    throw NoResultsError("stage '" + stage + "' has no results at revision " +
                         id.substr(0, 12) + " (never run there)");
  handle.lock_ = *sl;
  return handle;
}

ObjectId NodeHandle::ensure_local(const std::string& hex) {
  ObjectId oid = ObjectId::from_hex(hex);
  if (ws_.store().has(oid)) return oid;
  if (remote_ && remote_fetch_object(*remote_, oid, ws_.store())) {
    ++memo_->fetch_count;
    return oid;
  }
  throw ObjectMissingError(hex);
}

nlohmann::json NodeHandle::load_doc(const std::string& doc_path) {
  auto it = lock_.outs.find(doc_path);
  if (it == lock_.outs.end())
    throw NoResultsError("stage '" + stage_ + "' recorded no '" + doc_path +
                         "' at revision " + rev_.substr(0, 12));
  std::string bytes = ws_.store().read_bytes(ensure_local(it->second));
  try {
    return nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw DacError("malformed attribute document '" + doc_path + "': " + e.what());
  }
}

AttrValue NodeHandle::get_attr(const std::string& attr) {
  {
    std::lock_guard lk(memo_->mu);
    if (auto it = memo_->values.find(attr); it != memo_->values.end())
      return it->second;
  }

  AttrValue out;
  if (def_.has_out_attr(attr) || def_.has_metric(attr)) {
    std::string doc_path = def_.has_out_attr(attr) ? outs_doc_path(stage_)
                                                   : metrics_doc_path(stage_);
    nlohmann::json doc = load_doc(doc_path);
    if (!doc.contains(attr))
      throw NotFoundError("attribute '" + attr +
                          "' missing from document of stage '" + stage_ + "'");
    out.kind = AttrValue::Kind::kValue;
    out.value = doc[attr];
  } else if (std::find(def_.outs_path.begin(), def_.outs_path.end(), attr) !=
                 def_.outs_path.end() ||
             std::find(def_.plots.begin(), def_.plots.end(), attr) !=
                 def_.plots.end()) {
    const std::string* hex = nullptr;
    bool tree = false;
    if (auto it = lock_.outs.find(attr); it != lock_.outs.end()) {
      hex = &it->second;
    } else if (auto jt = lock_.outs.find(attr + "/"); jt != lock_.outs.end()) {
      hex = &jt->second;
      tree = true;
    }
    if (hex == nullptr)
      throw NoResultsError("stage '" + stage_ + "' recorded no output '" + attr +
                           "' at revision " + rev_.substr(0, 12));
    ObjectId oid = ensure_local(*hex);
    fs::path dest = ws_.scratch_dir() / rev_ / stage_ / attr;
    if (tree) {
      // Fetch nested file objects before materializing.
      std::string manifest = ws_.store().read_bytes(oid);
      std::size_t pos = 0;
      while (pos < manifest.size()) {
        std::size_t eol = manifest.find('\n', pos);
        if (eol == std::string::npos) eol = manifest.size();
        if (eol - pos > 64) ensure_local(manifest.substr(pos, 64));
        pos = eol + 1;
      }
      std::error_code ec;
      fs::remove_all(dest, ec);
      ws_.store().checkout_tree(oid, dest);
      if (ws_.store().hash_tree(dest) != oid)
        throw DacError("scratch checkout verification failed for '" + attr + "'");
    } else {
      ws_.store().checkout(oid, dest);
      if (ws_.store().hash_file(dest) != oid)
        throw DacError("scratch checkout verification failed for '" + attr + "'");
      std::error_code ec;
      fs::permissions(dest,
                      fs::perms::owner_read | fs::perms::group_read |
                          fs::perms::others_read,
                      fs::perm_options::replace, ec);
    }
    out.kind = AttrValue::Kind::kPath;
    out.path = dest;
  } else if (std::find(def_.params.begin(), def_.params.end(), attr) !=
             def_.params.end()) {
    auto it = params_.find(attr);
    if (it == params_.end())
      throw NotFoundError("param '" + attr + "' missing at revision " +
                          rev_.substr(0, 12));
    out.kind = AttrValue::Kind::kValue;
    out.value = std::visit([](const auto& v) { return nlohmann::json(v); },
                           it->second);
  } else {
    throw ValidationError("stage '" + stage_ + "' does not declare attribute '" +
                          attr + "'");
  }

  std::lock_guard lk(memo_->mu);
  auto [it, _] = memo_->values.emplace(attr, std::move(out));
  return it->second;
}

}  // namespace dac
