"""Built-in analysis processes.

``cashflow-gl-prediction`` is the standard cash-flow study: one cube
extract feeding three model branches.  A decision tree predicts the G/L
account of a posting from its vendor, date and amount (66/34 train/test);
k-means groups postings by vendor and amount (k=10, 10 bins, unit
weights); a through-origin regression scores expected amount per posting
date.  Results land in three flat files plus charts and a report feed.
"""

CASHFLOW_GL_PREDICTION = """\
process cashflow-gl-prediction

node extract source.cube_extract
  attributes = 0AC_DOC_NO, 0CREDITOR, 0GL_ACCOUNT, 0PSTNG_DATE
  key_figure = ZAMOUNT1

# --- decision tree: which G/L account does a posting book to? ---

node dt_data transform.select
  columns = 0CREDITOR, 0GL_ACCOUNT, 0PSTNG_DATE, ZAMOUNT1

node dt_split transform.split
  fraction = 0.66

node dt_train model.train
  algorithm = tree
  target = 0GL_ACCOUNT
  features = 0CREDITOR, 0PSTNG_DATE, ZAMOUNT1
  bins = 10

node dt_apply model.apply

node dt_result sink.file
  name = dt_result.csv

node dt_feed sink.report
  name = dt_result.jsonl

edge extract -> dt_data
edge dt_data -> dt_split
edge dt_split:train -> dt_train
edge dt_train -> dt_apply:model
edge dt_split:test -> dt_apply:data
edge dt_apply -> dt_result
edge dt_apply -> dt_feed

# --- clustering: which postings group together by vendor and amount? ---

node cl_train model.train
  algorithm = kmeans
  attributes = 0CREDITOR, ZAMOUNT1
  k = 10
  bins = 10

node cl_apply model.apply

node cl_result sink.file
  name = cl_result.csv

node cl_influence sink.chart
  kind = overall-influence
  title = Overall Influence Chart

node cl_inter sink.chart
  kind = inter-cluster-distance
  title = Inter Cluster Distance Graph

node cl_intra sink.chart
  kind = intra-cluster-distance
  title = Intra Cluster Distance Graph

node gl_dist sink.chart
  kind = attribute-distribution
  column = 0GL_ACCOUNT
  title = GL Account Value Distribution

edge extract -> cl_train
edge cl_train -> cl_apply:model
edge extract -> cl_apply:data
edge cl_apply -> cl_result
edge cl_train -> cl_influence:model
edge extract -> cl_influence:data
edge cl_train -> cl_inter:model
edge extract -> cl_inter:data
edge cl_train -> cl_intra:model
edge extract -> cl_intra:data
edge extract -> gl_dist

# --- regression: expected posting amount per date ---

node sc_train model.train
  algorithm = regression
  x = 0PSTNG_DATE
  y = ZAMOUNT1

node sc_apply model.apply

node sc_result sink.file
  name = sc_result.csv

node sc_chart sink.chart
  kind = regression-scoring
  x = 0PSTNG_DATE
  score = SC_SCORE002
  title = GL Account Scoring Output

edge extract -> sc_train
edge sc_train -> sc_apply:model
edge extract -> sc_apply:data
edge sc_apply -> sc_result
edge sc_apply -> sc_chart
"""

TEMPLATES = {
    "cashflow-gl-prediction": CASHFLOW_GL_PREDICTION,
}


def template_text(name: str) -> str | None:
    return TEMPLATES.get(name)
