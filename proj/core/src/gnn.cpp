#include "kgtrim/gnn.hpp"

#include <algorithm>
#include <cmath>

namespace kgtrim {

namespace {

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

bool row_is_zero(std::span<const double> row) {
    for (double x : row)
        if (x != 0.0) return false;
    return true;
}

void fill_dropout_table(Table& mask, double p, std::mt19937_64& rng) {
    const double scale = 1.0 / (1.0 - p);
    for (double& x : mask.data()) x = uniform_real(rng, 0.0, 1.0) < p ? 0.0 : scale;
}

// Shared KG propagation kernel. node_factor may be null (no node dropout).
void kg_layer(const Table& entity_in, const Table& relations,
              const std::vector<double>& scores, const KnowledgeGraph& kg,
              const double* node_factor, Table& out) {
    out.fill(0.0);
    const std::size_t d = entity_in.dim();
    for (EntityId v = 0; v < kg.num_entities; ++v) {
        const auto slots = kg.out_edges(v);
        if (slots.empty()) continue;
        double* acc = out.row_ptr(v);
        const double inv_deg = 1.0 / static_cast<double>(slots.size());
        for (TripleIndex k : slots) {
            const Triple& t = kg.triples[k];
            double coef = scores[k] * inv_deg;
            if (node_factor) coef *= node_factor[k];
            if (coef == 0.0) continue;
            const double* src = entity_in.row_ptr(t.tail);
            const double* er = relations.row_ptr(t.rel);
            for (std::size_t c = 0; c < d; ++c) acc[c] += coef * src[c] * er[c];
        }
    }
}

void cf_layer(const Table& entity_in, const InteractionGraph& inter, Table& out) {
    out.fill(0.0);
    const std::size_t d = entity_in.dim();
    for (UserId u = 0; u < inter.num_users; ++u) {
        const auto& items = inter.train_edges[u];
        if (items.empty()) continue;
        double* acc = out.row_ptr(u);
        for (ItemId i : items) {
            const double* src = entity_in.row_ptr(i);
            for (std::size_t c = 0; c < d; ++c) acc[c] += src[c];
        }
        const double inv = 1.0 / static_cast<double>(items.size());
        for (std::size_t c = 0; c < d; ++c) acc[c] *= inv;
    }
}

void add_table(Table& dst, const Table& src) {
    double* d = dst.data().data();
    const double* s = src.data().data();
    for (std::size_t i = 0; i < dst.data().size(); ++i) d[i] += s[i];
}

void mul_table(Table& dst, const Table& mask) {
    double* d = dst.data().data();
    const double* m = mask.data().data();
    for (std::size_t i = 0; i < dst.data().size(); ++i) d[i] *= m[i];
}

// Evaluator internals cached for the backward pass.
struct EvalCache {
    Table mean_rel;                    // mean in-relation embedding per entity
    Table enriched;                    // e_v'
    std::vector<double> user_norm2;
    std::vector<double> enriched_norm2;
    std::vector<double> cos;           // per Q CSR slot, pre-clip values <= 0 stored as-is
    std::vector<double> s_c;
    std::vector<double> s_hat;
};

EvalCache build_eval_cache(const ParameterStore& params, const UserEntityMatrix& q,
                           const KnowledgeGraph& kg, double gamma) {
    const std::size_t V = params.entity_embeddings.rows();
    const std::size_t U = params.user_embeddings.rows();
    const std::size_t d = params.dim;

    EvalCache ec;
    ec.mean_rel = Table(V, d);
    ec.enriched = Table(V, d);
    ec.user_norm2.resize(U);
    ec.enriched_norm2.resize(V);
    ec.cos.assign(q.users.size(), 0.0);
    ec.s_c.assign(V, 0.0);
    ec.s_hat.assign(V, 0.0);

    for (std::size_t u = 0; u < U; ++u) ec.user_norm2[u] = norm2(params.user_embeddings.row(u));

    for (std::size_t v = 0; v < V; ++v) {
        const auto e0 = params.entity_embeddings.row(v);
        auto enr = ec.enriched.row(v);
        const auto rels = v < kg.num_entities ? kg.in_relations(static_cast<EntityId>(v))
                                              : std::span<const RelationId>{};
        if (rels.empty()) {
            std::copy(e0.begin(), e0.end(), enr.begin());
        } else {
            auto mr = ec.mean_rel.row(v);
            for (RelationId r : rels) {
                const double* er = params.relation_embeddings.row_ptr(r);
                for (std::size_t c = 0; c < d; ++c) mr[c] += er[c];
            }
            const double inv = 1.0 / static_cast<double>(rels.size());
            for (std::size_t c = 0; c < d; ++c) {
                mr[c] *= inv;
                enr[c] = e0[c] * mr[c];
            }
        }
        ec.enriched_norm2[v] = norm2(enr);
    }

    for (std::size_t v = 0; v < V && v < q.num_entities(); ++v) {
        const auto col = q.column(static_cast<EntityId>(v));
        if (col.empty()) continue;
        const double nb2 = ec.enriched_norm2[v];
        double sum = 0.0;
        const std::uint64_t base = q.offsets[v];
        for (std::size_t s = 0; s < col.size(); ++s) {
            const UserId u = col[s];
            double c = 0.0;
            const double na2 = ec.user_norm2[u];
            if (na2 > 0.0 && nb2 > 0.0) {
                c = dot(params.user_embeddings.row(u), ec.enriched.row(v)) /
                    (std::sqrt(na2) * std::sqrt(nb2));
            }
            ec.cos[base + s] = c;
            if (c > 0.0) sum += c;
        }
        ec.s_c[v] = sum / static_cast<double>(col.size());
    }

    for (std::size_t v = 0; v < V; ++v) {
        ec.s_hat[v] = gamma * ec.s_c[v] + (1.0 - gamma) * params.holistic_raw[v];
    }
    return ec;
}

}  // namespace

bool GradientStore::all_finite() const {
    const auto ok = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    return ok(user.data()) && ok(entity.data()) && ok(relation.data()) && ok(holistic_raw);
}

Table kg_propagate_layer(const Table& entity_in, const ParameterStore& params,
                         const std::vector<double>& triplet_scores, const KnowledgeGraph& kg) {
    if (triplet_scores.size() != kg.triples.size()) {
        throw ValidationError("triplet score vector does not match triple count");
    }
    Table out(entity_in.rows(), entity_in.dim());
    kg_layer(entity_in, params.relation_embeddings, triplet_scores, kg, nullptr, out);
    return out;
}

Table cf_propagate_layer(const Table& entity_in, const InteractionGraph& inter) {
    Table out(inter.num_users, entity_in.dim());
    cf_layer(entity_in, inter, out);
    return out;
}

ForwardResult forward(const ParameterStore& params, const KnowledgeGraph& kg,
                      const InteractionGraph& inter, const std::vector<double>& triplet_scores,
                      std::uint32_t L, const DropoutSpec& dropout, Mode mode,
                      std::mt19937_64* rng) {
    if (triplet_scores.size() != kg.triples.size()) {
        throw ValidationError("triplet score vector does not match triple count");
    }
    const std::size_t V = params.entity_embeddings.rows();
    const std::size_t U = params.user_embeddings.rows();
    const std::size_t d = params.dim;
    const bool node_drop = mode == Mode::Train && dropout.p_node > 0.0;
    const bool msg_drop = mode == Mode::Train && dropout.p_msg > 0.0;
    if ((node_drop || msg_drop) && !rng) throw ConfigError("train-mode dropout requires an rng");

    ForwardResult res;
    res.layers.L = L;
    res.layers.entity_layers.push_back(params.entity_embeddings);
    res.layers.user_layers.push_back(params.user_embeddings);

    std::vector<double> node_factor;
    if (node_drop) {
        node_factor.resize(kg.triples.size());
        const double scale = 1.0 / (1.0 - dropout.p_node);
        for (double& x : node_factor) x = uniform_real(*rng, 0.0, 1.0) < dropout.p_node ? 0.0 : scale;
    }

    for (std::uint32_t l = 1; l <= L; ++l) {
        const Table& prev = res.layers.entity_layers[l - 1];
        Table x(V, d);
        kg_layer(prev, params.relation_embeddings, triplet_scores, kg,
                 node_drop ? node_factor.data() : nullptr, x);
        if (msg_drop) {
            Table mask(V, d);
            fill_dropout_table(mask, dropout.p_msg, *rng);
            mul_table(x, mask);
        }
        Table uu(U, d);
        cf_layer(prev, inter, uu);
        if (msg_drop) {
            Table mask(U, d);
            fill_dropout_table(mask, dropout.p_msg, *rng);
            mul_table(uu, mask);
        }
        res.layers.entity_layers.push_back(std::move(x));
        res.layers.user_layers.push_back(std::move(uu));
    }

    res.final_entity = res.layers.entity_layers[0];
    res.final_user = res.layers.user_layers[0];
    for (std::uint32_t l = 1; l <= L; ++l) {
        add_table(res.final_entity, res.layers.entity_layers[l]);
        add_table(res.final_user, res.layers.user_layers[l]);
    }
    return res;
}

double predict(const Table& final_user, const Table& final_entity, UserId u, ItemId i,
               std::uint32_t num_items) {
    if (u >= final_user.rows()) throw ValidationError("user id out of range");
    if (i >= num_items) {
        throw ValidationError("entity " + std::to_string(i) + " is not an item (items end at " +
                              std::to_string(num_items) + ")");
    }
    return dot(final_user.row(u), final_entity.row(i));
}

double bpr_loss(std::span<const double> pos_scores, std::span<const double> neg_scores) {
    if (pos_scores.size() != neg_scores.size()) {
        throw ValidationError("bpr_loss: pos/neg length mismatch");
    }
    double loss = 0.0;
    for (std::size_t b = 0; b < pos_scores.size(); ++b) {
        loss += softplus(neg_scores[b] - pos_scores[b]);
    }
    return loss;
}

GradResult compute_gradients(const ParameterStore& params, const std::vector<BprSample>& batch,
                             const KnowledgeGraph& kg, const InteractionGraph& inter,
                             const UserEntityMatrix& q, const GnnConfig& config, Mode mode,
                             std::mt19937_64* rng) {
    const std::size_t V = params.entity_embeddings.rows();
    const std::size_t U = params.user_embeddings.rows();
    const std::size_t R = params.relation_embeddings.rows();
    const std::size_t d = params.dim;
    const std::size_t M = kg.triples.size();
    const std::uint32_t L = config.layers;
    const bool node_drop = mode == Mode::Train && config.dropout.p_node > 0.0;
    const bool msg_drop = mode == Mode::Train && config.dropout.p_msg > 0.0;
    if ((node_drop || msg_drop) && !rng) throw ConfigError("train-mode dropout requires an rng");
    if (!(config.gamma >= 0.0 && config.gamma <= 1.0)) throw ConfigError("gamma must lie in [0,1]");

    GradResult res;
    res.grads.user = Table(U, d);
    res.grads.entity = Table(V, d);
    res.grads.relation = Table(R, d);
    res.grads.holistic_raw.assign(V, 0.0);

    // Evaluator forward.
    EvalCache ec;
    std::vector<double> w;
    if (config.unit_scores) {
        res.s_hat.assign(V, 1.0);
        w.assign(M, 1.0);
    } else {
        ec = build_eval_cache(params, q, kg, config.gamma);
        res.s_hat = ec.s_hat;
        w.resize(M);
        for (std::size_t k = 0; k < M; ++k) w[k] = triplet_score(ec.s_hat, kg.triples[k], config.transform);
    }

    // Dropout masks, sampled in a fixed order: node mask, then per layer
    // entity mask followed by user mask.
    std::vector<double> node_factor;
    if (node_drop) {
        node_factor.resize(M);
        const double scale = 1.0 / (1.0 - config.dropout.p_node);
        for (double& x : node_factor)
            x = uniform_real(*rng, 0.0, 1.0) < config.dropout.p_node ? 0.0 : scale;
    }
    std::vector<Table> ent_mask(L + 1), usr_mask(L + 1);

    // Forward layers.
    std::vector<Table> X, Uu;
    X.reserve(L + 1);
    Uu.reserve(L + 1);
    X.push_back(params.entity_embeddings);
    Uu.push_back(params.user_embeddings);
    for (std::uint32_t l = 1; l <= L; ++l) {
        Table x(V, d);
        kg_layer(X[l - 1], params.relation_embeddings, w, kg,
                 node_drop ? node_factor.data() : nullptr, x);
        if (msg_drop) {
            ent_mask[l] = Table(V, d);
            fill_dropout_table(ent_mask[l], config.dropout.p_msg, *rng);
            mul_table(x, ent_mask[l]);
        }
        Table uu(U, d);
        cf_layer(X[l - 1], inter, uu);
        if (msg_drop) {
            usr_mask[l] = Table(U, d);
            fill_dropout_table(usr_mask[l], config.dropout.p_msg, *rng);
            mul_table(uu, usr_mask[l]);
        }
        X.push_back(std::move(x));
        Uu.push_back(std::move(uu));
    }
    Table f_ent = X[0];
    Table f_usr = Uu[0];
    for (std::uint32_t l = 1; l <= L; ++l) {
        add_table(f_ent, X[l]);
        add_table(f_usr, Uu[l]);
    }

    // Loss and gradients on the final embeddings.
    Table df_usr(U, d), df_ent(V, d);
    double loss = 0.0;
    for (const BprSample& s : batch) {
        if (s.user >= U) throw ValidationError("batch user id out of range");
        if (s.pos >= inter.num_items || s.neg >= inter.num_items) {
            throw ValidationError("batch item id outside item range");
        }
        const double* fu = f_usr.row_ptr(s.user);
        const double* fi = f_ent.row_ptr(s.pos);
        const double* fj = f_ent.row_ptr(s.neg);
        double x = 0.0;
        for (std::size_t c = 0; c < d; ++c) x += fu[c] * (fi[c] - fj[c]);
        loss += softplus(-x);
        const double g = sigmoid(x) - 1.0;
        double* du = df_usr.row_ptr(s.user);
        double* di = df_ent.row_ptr(s.pos);
        double* dj = df_ent.row_ptr(s.neg);
        for (std::size_t c = 0; c < d; ++c) {
            du[c] += g * (fi[c] - fj[c]);
            di[c] += g * fu[c];
            dj[c] -= g * fu[c];
        }
        // L2 on the layer-0 rows this sample touches.
        if (config.l2 != 0.0) {
            const auto eu = params.user_embeddings.row(s.user);
            const auto ei = params.entity_embeddings.row(s.pos);
            const auto ej = params.entity_embeddings.row(s.neg);
            loss += config.l2 * (norm2(eu) + norm2(ei) + norm2(ej));
            double* gu = res.grads.user.row_ptr(s.user);
            double* gi = res.grads.entity.row_ptr(s.pos);
            double* gj = res.grads.entity.row_ptr(s.neg);
            for (std::size_t c = 0; c < d; ++c) {
                gu[c] += 2.0 * config.l2 * eu[c];
                gi[c] += 2.0 * config.l2 * ei[c];
                gj[c] += 2.0 * config.l2 * ej[c];
            }
        }
    }

    // User readout: layer 0 is the embedding itself.
    add_table(res.grads.user, df_usr);

    // Flags for skipping zero user rows in the CF transpose.
    std::vector<char> user_active(U, 0);
    for (std::size_t u = 0; u < U; ++u) user_active[u] = !row_is_zero(df_usr.row(u));

    // Entity layers, top down. G holds the gradient on post-dropout X[l].
    std::vector<double> dw(M, 0.0);
    Table g_cur = df_ent;
    for (std::uint32_t l = L; l >= 1; --l) {
        Table g_hat = g_cur;
        if (msg_drop) mul_table(g_hat, ent_mask[l]);

        Table g_prev(V, d);
        const Table& x_prev = X[l - 1];
        for (EntityId v = 0; v < kg.num_entities; ++v) {
            const auto slots = kg.out_edges(v);
            if (slots.empty()) continue;
            const double* gv = g_hat.row_ptr(v);
            if (row_is_zero(g_hat.row(v))) continue;
            const double inv_deg = 1.0 / static_cast<double>(slots.size());
            for (TripleIndex k : slots) {
                const Triple& t = kg.triples[k];
                const double nf = node_drop ? node_factor[k] : 1.0;
                if (nf == 0.0) continue;
                const double coef = nf * w[k] * inv_deg;
                const double* er = params.relation_embeddings.row_ptr(t.rel);
                const double* xp = x_prev.row_ptr(t.tail);
                double* gp = g_prev.row_ptr(t.tail);
                double* gr = res.grads.relation.row_ptr(t.rel);
                double dwk = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    gp[c] += coef * gv[c] * er[c];
                    gr[c] += coef * gv[c] * xp[c];
                    dwk += gv[c] * xp[c] * er[c];
                }
                dw[k] += nf * inv_deg * dwk;
            }
        }

        // CF transpose: U[l] consumed X[l-1].
        for (UserId u = 0; u < inter.num_users; ++u) {
            if (!user_active[u]) continue;
            const auto& items = inter.train_edges[u];
            if (items.empty()) continue;
            const double inv = 1.0 / static_cast<double>(items.size());
            const double* du = df_usr.row_ptr(u);
            const double* um = msg_drop ? usr_mask[l].row_ptr(u) : nullptr;
            for (ItemId i : items) {
                double* gp = g_prev.row_ptr(i);
                if (um) {
                    for (std::size_t c = 0; c < d; ++c) gp[c] += inv * du[c] * um[c];
                } else {
                    for (std::size_t c = 0; c < d; ++c) gp[c] += inv * du[c];
                }
            }
        }

        add_table(g_prev, df_ent);  // readout of layer l-1
        g_cur = std::move(g_prev);
    }
    add_table(res.grads.entity, g_cur);  // layer 0 = entity embeddings

    // Evaluator backward.
    if (!config.unit_scores) {
        std::vector<double> d_shat(V, 0.0);
        for (std::size_t k = 0; k < M; ++k) {
            if (dw[k] == 0.0) continue;
            const Triple& t = kg.triples[k];
            switch (config.transform) {
                case Transform::Tail:
                    d_shat[t.tail] += dw[k];
                    break;
                case Transform::Mean:
                    d_shat[t.head] += 0.5 * dw[k];
                    d_shat[t.tail] += 0.5 * dw[k];
                    break;
                case Transform::Product:
                    d_shat[t.head] += dw[k] * ec.s_hat[t.tail];
                    d_shat[t.tail] += dw[k] * ec.s_hat[t.head];
                    break;
            }
        }

        std::vector<double> db(d);
        for (std::size_t v = 0; v < V; ++v) {
            if (d_shat[v] == 0.0) continue;
            res.grads.holistic_raw[v] += (1.0 - config.gamma) * d_shat[v];
            const double dsc = config.gamma * d_shat[v];
            if (dsc == 0.0 || v >= q.num_entities()) continue;
            const auto col = q.column(static_cast<EntityId>(v));
            if (col.empty()) continue;

            const double nb2 = ec.enriched_norm2[v];
            if (nb2 == 0.0) continue;  // all cosines were clipped to 0
            const double* b = ec.enriched.row_ptr(v);
            std::fill(db.begin(), db.end(), 0.0);
            const double per_user = dsc / static_cast<double>(col.size());
            const std::uint64_t base = q.offsets[v];
            bool touched = false;
            for (std::size_t s = 0; s < col.size(); ++s) {
                const double c = ec.cos[base + s];
                if (c <= 0.0) continue;  // clip region: zero gradient
                touched = true;
                const UserId u = col[s];
                const double na2 = ec.user_norm2[u];
                const double inv_nanb = 1.0 / (std::sqrt(na2) * std::sqrt(nb2));
                const double* a = params.user_embeddings.row_ptr(u);
                double* gu = res.grads.user.row_ptr(u);
                for (std::size_t cdim = 0; cdim < d; ++cdim) {
                    gu[cdim] += per_user * (b[cdim] * inv_nanb - c * a[cdim] / na2);
                    db[cdim] += per_user * (a[cdim] * inv_nanb - c * b[cdim] / nb2);
                }
            }
            if (!touched) continue;

            // Through e_v' into the entity and relation tables.
            const auto rels = v < kg.num_entities ? kg.in_relations(static_cast<EntityId>(v))
                                                  : std::span<const RelationId>{};
            double* ge = res.grads.entity.row_ptr(v);
            if (rels.empty()) {
                for (std::size_t c = 0; c < d; ++c) ge[c] += db[c];
            } else {
                const double* mr = ec.mean_rel.row_ptr(v);
                const double* e0 = params.entity_embeddings.row_ptr(v);
                const double inv_m = 1.0 / static_cast<double>(rels.size());
                for (RelationId r : rels) {
                    double* gr = res.grads.relation.row_ptr(r);
                    for (std::size_t c = 0; c < d; ++c) gr[c] += inv_m * db[c] * e0[c];
                }
                for (std::size_t c = 0; c < d; ++c) ge[c] += db[c] * mr[c];
            }
        }
    }

    res.loss = loss;
    if (!std::isfinite(loss) || !res.grads.all_finite()) {
        throw NumericError("non-finite loss or gradient in batch of size " +
                           std::to_string(batch.size()));
    }
    return res;
}

}  // namespace kgtrim
