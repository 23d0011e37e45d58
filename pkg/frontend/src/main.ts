import { FlowcaseClient } from './api.js'
import { Dashboard } from './app.js'

// Same-origin by default (the dev server proxies to the API); an explicit
// ?api=http://host:port overrides for a directly exposed backend.
const apiBase = new URLSearchParams(window.location.search).get('api') ?? ''

const root = document.getElementById('app')
if (!root) throw new Error('missing #app mount point')

const dashboard = new Dashboard(root, new FlowcaseClient(apiBase))
void dashboard.init()

declare global {
  interface Window {
    flowcaseDashboard?: Dashboard
  }
}
window.flowcaseDashboard = dashboard
