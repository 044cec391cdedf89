import { ApiClient } from './api.js';
import { ReviewApp } from './ui.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

new ReviewApp(root, new ApiClient()).start();
